#include "mrf/config.hpp"

#include <fstream>
#include <sstream>

#include "mrf/csv.hpp"

namespace mrf {
namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> tokenize(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> tokens;
    std::string token;
    while (is >> token) tokens.push_back(token);
    return tokens;
}

} // namespace

void KeyValues::set(const std::string& key, const std::string& value) {
    items_.emplace_back(key, value);
}

void KeyValues::set_double(const std::string& key, double value) {
    set(key, format_double(value));
}

void KeyValues::set_long(const std::string& key, long value) {
    set(key, std::to_string(value));
}

bool KeyValues::has(const std::string& key) const {
    for (const auto& [k, v] : items_)
        if (k == key) return true;
    return false;
}

std::string KeyValues::get(const std::string& key) const {
    for (const auto& [k, v] : items_)
        if (k == key) return v;
    throw ParseError("missing required key '" + key + "'");
}

std::string KeyValues::get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
}

double KeyValues::get_double(const std::string& key) const {
    return parse_double(get(key), "key '" + key + "'");
}

double KeyValues::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long KeyValues::get_long(const std::string& key) const {
    return parse_long(get(key), "key '" + key + "'");
}

long KeyValues::get_long_or(const std::string& key, long fallback) const {
    return has(key) ? get_long(key) : fallback;
}

std::vector<std::string> KeyValues::get_all(const std::string& key) const {
    std::vector<std::string> values;
    for (const auto& [k, v] : items_)
        if (k == key) values.push_back(v);
    return values;
}

KeyValues parse_key_values(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "' for reading");

    KeyValues kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 'key = value'");
        const std::string key = trim(text.substr(0, eq));
        if (key.empty())
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": empty key");
        kv.set(key, trim(text.substr(eq + 1)));
    }
    return kv;
}

void write_key_values(const std::filesystem::path& path, const KeyValues& kv) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
    for (const auto& [key, value] : kv.items()) out << key << " = " << value << '\n';
}

TissueSpec parse_spec_line(const std::string& value, const std::string& context) {
    const std::vector<std::string> tokens = tokenize(value);
    if (tokens.size() != 5)
        throw ParseError(context +
                         ": spec needs 5 fields (varying range_min range_max fixed weight)");
    TissueSpec spec;
    spec.varying = param_from_string(tokens[0]);
    spec.range_min = parse_double(tokens[1], context);
    spec.range_max = parse_double(tokens[2], context);
    spec.fixed_other = parse_double(tokens[3], context);
    spec.weight = parse_double(tokens[4], context);
    validate(spec);
    return spec;
}

std::string format_spec_line(const TissueSpec& spec) {
    return std::string(to_string(spec.varying)) + " " + format_double(spec.range_min) + " " +
           format_double(spec.range_max) + " " + format_double(spec.fixed_other) + " " +
           format_double(spec.weight);
}

DesignProblem problem_from_key_values(const KeyValues& kv) {
    DesignProblem problem;
    problem.n_frames = static_cast<int>(kv.get_long("n_frames"));
    if (problem.n_frames < 1) throw ParseError("n_frames must be positive");
    const int n = problem.n_frames;

    problem.echo_time_ms = kv.get_double_or("echo_time_ms", 3.0);

    const double fa_min = kv.get_double_or("fa_min_deg", 10.0);
    const double fa_max = kv.get_double_or("fa_max_deg", 60.0);
    problem.fa_min_deg = Eigen::VectorXd::Constant(n, fa_min);
    problem.fa_max_deg = Eigen::VectorXd::Constant(n, fa_max);
    problem.fa_min_deg[0] = kv.get_double_or("fa_first_min_deg", 10.0);
    problem.fa_max_deg[0] = kv.get_double_or("fa_first_max_deg", 180.0);

    problem.tr_min_ms = Eigen::VectorXd::Constant(n, kv.get_double_or("tr_min_ms", 12.0));
    problem.tr_max_ms = Eigen::VectorXd::Constant(n, kv.get_double_or("tr_max_ms", 15.0));

    problem.fa_slew_max_deg =
        Eigen::VectorXd::Constant(std::max(0, n - 1), kv.get_double_or("fa_slew_max_deg", 1.0));
    if (n > 1)
        problem.fa_slew_max_deg[0] =
            kv.get_double_or("fa_first_slew_max_deg", kUnconstrainedSlewDeg);

    problem.quad.n_grid = static_cast<int>(kv.get_long_or("n_grid", 32));
    problem.epg.n_states = static_cast<int>(kv.get_long_or("n_states", 0));
    problem.epg.inversion_efficiency = kv.get_double_or("inversion_efficiency", 1.0);

    for (const std::string& line : kv.get_all("spec"))
        problem.specs.push_back(parse_spec_line(line, "spec '" + line + "'"));
    if (problem.specs.empty()) throw ParseError("config defines no 'spec' lines");

    if (kv.has("sigma2")) problem.noise.sigma2 = kv.get_double("sigma2");
    return problem;
}

KeyValues key_values_from_problem(const DesignProblem& problem) {
    KeyValues kv;
    kv.set_long("n_frames", problem.n_frames);
    kv.set_double("echo_time_ms", problem.echo_time_ms);
    kv.set_double("fa_min_deg", problem.fa_min_deg[std::min(1, problem.n_frames - 1)]);
    kv.set_double("fa_max_deg", problem.fa_max_deg[std::min(1, problem.n_frames - 1)]);
    kv.set_double("fa_first_min_deg", problem.fa_min_deg[0]);
    kv.set_double("fa_first_max_deg", problem.fa_max_deg[0]);
    kv.set_double("tr_min_ms", problem.tr_min_ms[0]);
    kv.set_double("tr_max_ms", problem.tr_max_ms[0]);
    if (problem.n_frames > 1) {
        kv.set_double("fa_slew_max_deg",
                      problem.fa_slew_max_deg[std::min(1, problem.n_frames - 2)]);
        kv.set_double("fa_first_slew_max_deg", problem.fa_slew_max_deg[0]);
    }
    kv.set_long("n_grid", problem.quad.n_grid);
    kv.set_long("n_states", problem.epg.n_states);
    kv.set_double("inversion_efficiency", problem.epg.inversion_efficiency);
    kv.set_double("sigma2", problem.noise.sigma2);
    for (const TissueSpec& spec : problem.specs) kv.set("spec", format_spec_line(spec));
    return kv;
}

} // namespace mrf
