#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mrf/seqopt.hpp"

namespace mrf {

/// Flat `key = value` store preserving insertion order. Keys may repeat
/// (arrays); '#' starts a comment.
class KeyValues {
public:
    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double value);
    void set_long(const std::string& key, long value);

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const; ///< throws ParseError when absent
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    long get_long(const std::string& key) const;
    long get_long_or(const std::string& key, long fallback) const;
    std::vector<std::string> get_all(const std::string& key) const;

    const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

KeyValues parse_key_values(const std::filesystem::path& path);
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);

/// Parses a `spec = T1 100 500 20 0.005` value (varying, range_min,
/// range_max, fixed_other, weight).
TissueSpec parse_spec_line(const std::string& value, const std::string& context);
std::string format_spec_line(const TissueSpec& spec);

/// Design problem from a problem config. Recognized keys (defaults in
/// parentheses): n_frames, echo_time_ms (3), fa_min_deg (10), fa_max_deg
/// (60), fa_first_min_deg (10), fa_first_max_deg (180), fa_slew_max_deg (1),
/// fa_first_slew_max_deg (1e6), tr_min_ms (12), tr_max_ms (15), n_grid (32),
/// n_states (0 = exact), inversion_efficiency (1), and one `spec` line per
/// tissue spec. Noise is left at sigma2 = 0 for the caller to resolve.
DesignProblem problem_from_key_values(const KeyValues& kv);

/// Serializes the resolved problem back to the flat format (stable key
/// order), so run manifests can reproduce it.
KeyValues key_values_from_problem(const DesignProblem& problem);

} // namespace mrf
