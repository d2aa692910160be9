#include "mrf/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace mrf {
namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string::size_type start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return fields;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary); // binary keeps LF endings
    if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void require_header(const std::vector<std::string>& lines, const std::string& expected,
                    const std::filesystem::path& path) {
    if (lines.empty() || trim(lines.front()) != expected)
        throw ParseError(path.string() + ":1: expected header '" + expected + "'");
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    const std::to_chars_result res = std::to_chars(buf, buf + sizeof(buf), value);
    if (res.ec != std::errc{}) throw NumericError("cannot format double");
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
    const std::string t = trim(text);
    double value = 0.0;
    const std::from_chars_result res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ParseError(context + ": cannot parse '" + text + "' as a number");
    return value;
}

long parse_long(const std::string& text, const std::string& context) {
    const std::string t = trim(text);
    long value = 0;
    const std::from_chars_result res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ParseError(context + ": cannot parse '" + text + "' as an integer");
    return value;
}

void write_schedule_csv(const std::filesystem::path& path, const Schedule& schedule) {
    std::ofstream out = open_out(path);
    out << "frame,fa_deg,tr_ms\n";
    for (Eigen::Index i = 0; i < schedule.n_frames(); ++i)
        out << (i + 1) << ',' << format_double(schedule.fa_deg[i]) << ','
            << format_double(schedule.tr_ms[i]) << '\n';
}

Schedule read_schedule_csv(const std::filesystem::path& path, double te_ms) {
    const std::vector<std::string> lines = read_lines(path);
    require_header(lines, "frame,fa_deg,tr_ms", path);

    std::vector<double> fa, tr;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(i + 1);
        const std::vector<std::string> fields = split(lines[i], ',');
        if (fields.size() != 3) throw ParseError(where + ": expected 3 fields");
        const long frame = parse_long(fields[0], where);
        if (frame != static_cast<long>(fa.size()) + 1)
            throw ParseError(where + ": frame indices must ascend from 1, got " +
                             std::to_string(frame));
        fa.push_back(parse_double(fields[1], where));
        tr.push_back(parse_double(fields[2], where));
    }
    if (fa.empty()) throw ParseError(path.string() + ": schedule has no frames");

    Schedule schedule;
    schedule.fa_deg = Eigen::Map<const Eigen::VectorXd>(fa.data(), static_cast<Eigen::Index>(fa.size()));
    schedule.tr_ms = Eigen::Map<const Eigen::VectorXd>(tr.data(), static_cast<Eigen::Index>(tr.size()));
    schedule.te_ms = te_ms;
    return schedule;
}

void write_fingerprint_csv(const std::filesystem::path& path, const Fingerprint& fingerprint) {
    std::ofstream out = open_out(path);
    out << "frame,signal\n";
    for (Eigen::Index i = 0; i < fingerprint.size(); ++i)
        out << (i + 1) << ',' << format_double(fingerprint[i]) << '\n';
}

Fingerprint read_fingerprint_csv(const std::filesystem::path& path) {
    const std::vector<std::string> lines = read_lines(path);
    require_header(lines, "frame,signal", path);
    std::vector<double> samples;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(i + 1);
        const std::vector<std::string> fields = split(lines[i], ',');
        if (fields.size() != 2) throw ParseError(where + ": expected 2 fields");
        samples.push_back(parse_double(fields[1], where));
    }
    return Eigen::Map<const Eigen::VectorXd>(samples.data(),
                                             static_cast<Eigen::Index>(samples.size()));
}

void write_cost_history_csv(const std::filesystem::path& path,
                            const std::vector<double>& cost_history) {
    std::ofstream out = open_out(path);
    out << "iter,cost\n";
    for (std::size_t i = 0; i < cost_history.size(); ++i)
        out << i << ',' << format_double(cost_history[i]) << '\n';
}

void write_double_grid_csv(const std::filesystem::path& path, const Eigen::ArrayXXd& grid) {
    std::ofstream out = open_out(path);
    for (Eigen::Index y = 0; y < grid.rows(); ++y) {
        for (Eigen::Index x = 0; x < grid.cols(); ++x) {
            if (x) out << ',';
            out << format_double(grid(y, x));
        }
        out << '\n';
    }
}

void write_label_grid_csv(const std::filesystem::path& path, const Eigen::ArrayXXi& labels) {
    std::ofstream out = open_out(path);
    for (Eigen::Index y = 0; y < labels.rows(); ++y) {
        for (Eigen::Index x = 0; x < labels.cols(); ++x) {
            if (x) out << ',';
            out << labels(y, x);
        }
        out << '\n';
    }
}

Eigen::ArrayXXi read_label_grid_csv(const std::filesystem::path& path) {
    const std::vector<std::string> lines = read_lines(path);
    std::vector<std::vector<long>> rows;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(i + 1);
        std::vector<long> row;
        for (const std::string& field : split(lines[i], ','))
            row.push_back(parse_long(field, where));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(where + ": ragged label grid");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path.string() + ": label grid is empty");

    Eigen::ArrayXXi labels(static_cast<Eigen::Index>(rows.size()),
                           static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index y = 0; y < labels.rows(); ++y)
        for (Eigen::Index x = 0; x < labels.cols(); ++x)
            labels(y, x) = static_cast<int>(rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)]);
    return labels;
}

std::vector<Tissue> read_tissue_table_csv(const std::filesystem::path& path) {
    const std::vector<std::string> lines = read_lines(path);
    require_header(lines, "label,t1_ms,t2_ms", path);
    std::vector<Tissue> tissues;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(i + 1);
        const std::vector<std::string> fields = split(lines[i], ',');
        if (fields.size() != 3) throw ParseError(where + ": expected 3 fields");
        const long label = parse_long(fields[0], where);
        if (label != static_cast<long>(tissues.size()) + 1)
            throw ParseError(where + ": labels must ascend from 1, got " + std::to_string(label));
        tissues.push_back({parse_double(fields[1], where), parse_double(fields[2], where)});
    }
    if (tissues.empty()) throw ParseError(path.string() + ": tissue table is empty");
    return tissues;
}

void write_tissue_table_csv(const std::filesystem::path& path,
                            const std::vector<Tissue>& tissues) {
    std::ofstream out = open_out(path);
    out << "label,t1_ms,t2_ms\n";
    for (std::size_t i = 0; i < tissues.size(); ++i)
        out << (i + 1) << ',' << format_double(tissues[i].t1_ms) << ','
            << format_double(tissues[i].t2_ms) << '\n';
}

void write_dictionary_csv(const std::filesystem::path& path, const Dictionary& dictionary) {
    std::ofstream out = open_out(path);
    out << "t1_ms,t2_ms,norm";
    for (Eigen::Index i = 0; i < dictionary.atoms.rows(); ++i) out << ",s" << (i + 1);
    out << '\n';
    for (Eigen::Index a = 0; a < dictionary.n_atoms(); ++a) {
        out << format_double(dictionary.tissues[static_cast<std::size_t>(a)].t1_ms) << ','
            << format_double(dictionary.tissues[static_cast<std::size_t>(a)].t2_ms) << ','
            << format_double(dictionary.norms[a]);
        for (Eigen::Index i = 0; i < dictionary.atoms.rows(); ++i)
            out << ',' << format_double(dictionary.atoms(i, a));
        out << '\n';
    }
}

Dictionary read_dictionary_csv(const std::filesystem::path& path) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw ParseError(path.string() + ": dictionary file is empty");
    const std::vector<std::string> header = split(lines.front(), ',');
    if (header.size() < 4 || header[0] != "t1_ms" || header[1] != "t2_ms" || header[2] != "norm")
        throw ParseError(path.string() + ":1: expected header 't1_ms,t2_ms,norm,s1,...'");
    const std::size_t n_frames = header.size() - 3;

    Dictionary dict;
    std::vector<std::vector<double>> atom_rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(i + 1);
        const std::vector<std::string> fields = split(lines[i], ',');
        if (fields.size() != header.size())
            throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields");
        dict.tissues.push_back({parse_double(fields[0], where), parse_double(fields[1], where)});
        std::vector<double> samples(n_frames);
        for (std::size_t s = 0; s < n_frames; ++s)
            samples[s] = parse_double(fields[3 + s], where);
        atom_rows.push_back(std::move(samples));
        dict.norms.conservativeResize(static_cast<Eigen::Index>(atom_rows.size()));
        dict.norms[static_cast<Eigen::Index>(atom_rows.size()) - 1] =
            parse_double(fields[2], where);
    }
    if (atom_rows.empty()) throw ParseError(path.string() + ": dictionary has no atoms");

    dict.atoms.resize(static_cast<Eigen::Index>(n_frames),
                      static_cast<Eigen::Index>(atom_rows.size()));
    for (std::size_t a = 0; a < atom_rows.size(); ++a)
        for (std::size_t s = 0; s < n_frames; ++s)
            dict.atoms(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) =
                atom_rows[a][s];
    return dict;
}

void write_bounds_csv(const std::filesystem::path& path, const std::vector<BoundsRow>& rows) {
    std::ofstream out = open_out(path);
    out << "spec_id,sigma2,zzb_ms2,crb_ms2,mc_mse_ms2,n_grid,n_trials\n";
    for (const BoundsRow& row : rows) {
        out << row.spec_id << ',' << format_double(row.sigma2) << ',';
        if (row.has_zzb) out << format_double(row.zzb_ms2);
        out << ',';
        if (row.has_crb) out << format_double(row.crb_ms2);
        out << ',';
        if (row.has_mc) out << format_double(row.mc_mse_ms2);
        out << ',' << row.n_grid << ',';
        if (row.has_mc) out << row.n_trials;
        out << '\n';
    }
}

void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<SchemeComparison>& rows) {
    std::ofstream out = open_out(path);
    out << "scheme,t1_nmse,t2_nmse,sigma2,n_frames,seed\n";
    for (const SchemeComparison& row : rows)
        out << row.scheme << ',' << format_double(row.t1_nmse) << ','
            << format_double(row.t2_nmse) << ',' << format_double(row.sigma2) << ','
            << row.n_frames << ',' << row.seed << '\n';
}

} // namespace mrf
