#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mrf/pipeline.hpp"
#include "mrf/types.hpp"

namespace mrf {

/// Shortest decimal form that parses back to the same double. Locale-free,
/// '.' decimal separator.
std::string format_double(double value);

/// Locale-free strtod replacement; throws ParseError on trailing garbage.
double parse_double(const std::string& text, const std::string& context);
long parse_long(const std::string& text, const std::string& context);

/// Schedule CSV: header `frame,fa_deg,tr_ms`, frame indices 1..N ascending.
/// The echo time travels in run configuration, not in the file.
void write_schedule_csv(const std::filesystem::path& path, const Schedule& schedule);
Schedule read_schedule_csv(const std::filesystem::path& path, double te_ms);

/// Fingerprint CSV: header `frame,signal`.
void write_fingerprint_csv(const std::filesystem::path& path, const Fingerprint& fingerprint);
Fingerprint read_fingerprint_csv(const std::filesystem::path& path);

/// Cost history CSV: header `iter,cost`, iteration 0 is the initial cost.
void write_cost_history_csv(const std::filesystem::path& path,
                            const std::vector<double>& cost_history);

/// Grid CSVs: height rows of comma-separated values (no header).
void write_double_grid_csv(const std::filesystem::path& path, const Eigen::ArrayXXd& grid);
void write_label_grid_csv(const std::filesystem::path& path, const Eigen::ArrayXXi& labels);
Eigen::ArrayXXi read_label_grid_csv(const std::filesystem::path& path);

/// Tissue table CSV: header `label,t1_ms,t2_ms`, labels 1..K each appearing
/// exactly once. Combined with a label grid this yields a Phantom.
std::vector<Tissue> read_tissue_table_csv(const std::filesystem::path& path);
void write_tissue_table_csv(const std::filesystem::path& path, const std::vector<Tissue>& tissues);

/// Dictionary CSV: header `t1_ms,t2_ms,norm,s1,...,sN`.
void write_dictionary_csv(const std::filesystem::path& path, const Dictionary& dictionary);
Dictionary read_dictionary_csv(const std::filesystem::path& path);

/// One bound-evaluation row; absent values render as empty cells.
struct BoundsRow {
    std::string spec_id;
    double sigma2 = 0.0;
    bool has_zzb = false;
    double zzb_ms2 = 0.0;
    bool has_crb = false;
    double crb_ms2 = 0.0;
    bool has_mc = false;
    double mc_mse_ms2 = 0.0;
    int n_grid = 0;
    long n_trials = 0;
};

void write_bounds_csv(const std::filesystem::path& path, const std::vector<BoundsRow>& rows);

void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<SchemeComparison>& rows);

} // namespace mrf
