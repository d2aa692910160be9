// mrfdesign: command-line surface for fingerprint simulation, bound
// evaluation, schedule optimization and desk-scale reconstruction studies.
//
// Every command writes its artifacts into --outdir together with a
// manifest.txt holding the fully resolved configuration; `mrfdesign rerun
// <manifest>` reproduces the artifacts bit-identically.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "mrf/bounds.hpp"
#include "mrf/config.hpp"
#include "mrf/csv.hpp"
#include "mrf/epg.hpp"
#include "mrf/manifest.hpp"
#include "mrf/pipeline.hpp"
#include "mrf/seqopt.hpp"

namespace fs = std::filesystem;
using namespace mrf;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitPrecondition = 3;
constexpr int kExitNumeric = 4;

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string::size_type start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(s.substr(start));
            break;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

Tissue parse_tissue(const std::string& text) {
    const std::vector<std::string> parts = split_on(text, ',');
    if (parts.size() != 2) throw ParseError("expected --tissue T1,T2 (ms), got '" + text + "'");
    return {parse_double(parts[0], "tissue t1"), parse_double(parts[1], "tissue t2")};
}

// Grid specs: "lin:lo:hi:count" (uniform, inclusive) or "log:lo:hi:count"
// (geometric, requires lo > 0).
std::vector<double> parse_grid_spec(const std::string& text) {
    const std::vector<std::string> parts = split_on(text, ':');
    if (parts.size() != 4 || (parts[0] != "lin" && parts[0] != "log"))
        throw ParseError("expected grid spec lin:lo:hi:count or log:lo:hi:count, got '" + text +
                         "'");
    const double lo = parse_double(parts[1], "grid lo");
    const double hi = parse_double(parts[2], "grid hi");
    const long count = parse_long(parts[3], "grid count");
    if (count < 1 || hi < lo) throw ParseError("bad grid spec '" + text + "'");
    if (parts[0] == "log" && !(lo > 0.0))
        throw ParseError("log grid requires positive endpoints");

    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(count));
    if (count == 1) {
        values.push_back(lo);
        return values;
    }
    for (long i = 0; i < count; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(count - 1);
        values.push_back(parts[0] == "lin" ? lo + (hi - lo) * f : lo * std::pow(hi / lo, f));
    }
    return values;
}

std::vector<double> parse_sigma2_sweep(const std::string& text) {
    const std::vector<std::string> parts = split_on(text, ':');
    if (parts.size() != 3) throw ParseError("expected --sweep-sigma2 a:b:k, got '" + text + "'");
    const double a = parse_double(parts[0], "sweep a");
    const double b = parse_double(parts[1], "sweep b");
    const long k = parse_long(parts[2], "sweep k");
    if (!(a > 0.0) || !(b > 0.0) || k < 1) throw ParseError("bad sweep spec '" + text + "'");
    std::vector<double> values;
    for (long i = 0; i < k; ++i) {
        const double f = k == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(k - 1);
        values.push_back(a * std::pow(b / a, f)); // geometric ladder
    }
    return values;
}

EpgConfig epg_from(const KeyValues& cfg) {
    EpgConfig epg;
    epg.n_states = static_cast<int>(cfg.get_long_or("n_states", 0));
    epg.inversion_efficiency = cfg.get_double_or("inversion_efficiency", 1.0);
    return epg;
}

Phantom phantom_from(const KeyValues& cfg) {
    if (cfg.get_or("phantom", "synthetic") == "synthetic")
        return synthetic_phantom(static_cast<int>(cfg.get_long_or("phantom_width", 64)),
                                 static_cast<int>(cfg.get_long_or("phantom_height", 64)));
    Phantom phantom;
    phantom.labels = read_label_grid_csv(cfg.get("phantom_labels"));
    phantom.tissues = read_tissue_table_csv(cfg.get("phantom_tissues"));
    phantom.height = static_cast<int>(phantom.labels.rows());
    phantom.width = static_cast<int>(phantom.labels.cols());
    validate(phantom);
    return phantom;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

fs::path ensure_outdir(const fs::path& outdir) {
    fs::create_directories(outdir);
    return outdir;
}

// ---------------------------------------------------------------------------
// command cores: everything below reads only the resolved cfg keys, so a
// rerun from a manifest follows the exact same path.

void run_simulate(const KeyValues& cfg, const fs::path& outdir) {
    const Timer timer;
    const Schedule schedule =
        read_schedule_csv(cfg.get("schedule"), cfg.get_double_or("te_ms", 3.0));
    const Tissue tissue{cfg.get_double("t1_ms"), cfg.get_double("t2_ms")};
    const Fingerprint fp = simulate_fingerprint(schedule, tissue, epg_from(cfg));

    write_fingerprint_csv(outdir / "fingerprint.csv", fp);
    KeyValues outputs;
    outputs.set("fingerprint", "fingerprint.csv");
    write_manifest(outdir / "manifest.txt", "simulate", cfg, outputs, timer.elapsed_ms());
}

std::vector<TissueSpec> specs_from(const KeyValues& cfg) {
    std::vector<TissueSpec> specs;
    for (const std::string& line : cfg.get_all("spec"))
        specs.push_back(parse_spec_line(line, "spec '" + line + "'"));
    if (specs.empty()) throw ParseError("no tissue specs given (need 'spec' entries)");
    return specs;
}

std::vector<std::string> spec_ids_from(const KeyValues& cfg, std::size_t n_specs) {
    std::vector<std::string> ids = cfg.get_all("spec_id");
    if (ids.empty())
        for (std::size_t i = 0; i < n_specs; ++i) ids.push_back(std::to_string(i + 1));
    if (ids.size() != n_specs) throw ParseError("spec_id count does not match spec count");
    return ids;
}

void run_zzb(const KeyValues& cfg, const fs::path& outdir) {
    const Timer timer;
    const Schedule schedule =
        read_schedule_csv(cfg.get("schedule"), cfg.get_double_or("te_ms", 3.0));
    const EpgConfig epg = epg_from(cfg);
    const QuadratureConfig quad{static_cast<int>(cfg.get_long_or("n_grid", 64))};
    const std::vector<TissueSpec> specs = specs_from(cfg);
    const std::vector<std::string> ids = spec_ids_from(cfg, specs.size());

    std::vector<double> sigma2_values;
    if (cfg.has("sweep_sigma2"))
        sigma2_values = parse_sigma2_sweep(cfg.get("sweep_sigma2"));
    else
        sigma2_values.push_back(cfg.get_double("sigma2"));

    const bool with_crb = cfg.get_long_or("with_crb", 0) != 0;
    const long mc_trials = cfg.get_long_or("mc_trials", 0);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long_or("seed", 1));

    std::vector<BoundsRow> rows;
    for (std::size_t s = 0; s < specs.size(); ++s) {
        for (const double sigma2 : sigma2_values) {
            const NoiseModel noise{sigma2};
            BoundsRow row;
            row.spec_id = ids[s];
            row.sigma2 = sigma2;
            row.n_grid = quad.n_grid;
            row.has_zzb = true;
            row.zzb_ms2 = zzb(schedule, specs[s], noise, epg, quad);
            if (with_crb) {
                row.has_crb = true;
                row.crb_ms2 =
                    crb(schedule, specs[s].center_tissue(), noise, epg, specs[s].varying);
            }
            if (mc_trials > 0) {
                row.has_mc = true;
                row.n_trials = mc_trials;
                row.mc_mse_ms2 =
                    monte_carlo_mse(schedule, specs[s], noise, epg, quad, mc_trials, seed);
            }
            rows.push_back(row);
        }
    }
    write_bounds_csv(outdir / "bounds.csv", rows);
    KeyValues outputs;
    outputs.set("bounds", "bounds.csv");
    write_manifest(outdir / "manifest.txt", "zzb", cfg, outputs, timer.elapsed_ms());
}

void run_crb(const KeyValues& cfg, const fs::path& outdir) {
    const Timer timer;
    const Schedule schedule =
        read_schedule_csv(cfg.get("schedule"), cfg.get_double_or("te_ms", 3.0));
    const EpgConfig epg = epg_from(cfg);
    const NoiseModel noise{cfg.get_double("sigma2")};
    const Tissue tissue{cfg.get_double("t1_ms"), cfg.get_double("t2_ms")};
    const Param target = param_from_string(cfg.get("target"));

    BoundsRow row;
    row.spec_id = cfg.get_or("spec_id", "1");
    row.sigma2 = noise.sigma2;
    row.has_crb = true;
    row.crb_ms2 = crb(schedule, tissue, noise, epg, target);
    write_bounds_csv(outdir / "bounds.csv", {row});

    KeyValues outputs;
    outputs.set("bounds", "bounds.csv");
    write_manifest(outdir / "manifest.txt", "crb", cfg, outputs, timer.elapsed_ms());
}

void run_optimize(const KeyValues& cfg, const fs::path& outdir) {
    const Timer timer;
    DesignProblem problem = problem_from_key_values(cfg);
    SolverConfig solver;
    solver.max_iters = static_cast<int>(cfg.get_long_or("max_iters", 100));
    solver.rel_tol = cfg.get_double_or("rel_tol", 1e-4);
    solver.fd_rel_step = cfg.get_double_or("fd_rel_step", 1e-3);
    solver.step_init = cfg.get_double_or("step_init", 1.0);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long_or("seed", 1));
    const std::string objective = cfg.get_or("objective", "zzb");

    const Schedule initial = initial_schedule_for(problem, seed);
    const OptimizationResult result = objective == "crb" ? optimize_crb(initial, problem, solver)
                                                         : optimize(initial, problem, solver);

    write_schedule_csv(outdir / "schedule_opt.csv", result.schedule);
    write_schedule_csv(outdir / "fa_tr_plot.csv", result.schedule);
    write_cost_history_csv(outdir / "cost_history.csv", result.cost_history);

    KeyValues outputs;
    outputs.set("schedule", "schedule_opt.csv");
    outputs.set("fa_tr_plot", "fa_tr_plot.csv");
    outputs.set("cost_history", "cost_history.csv");
    outputs.set_double("initial_cost", result.initial_cost);
    outputs.set_double("final_cost", result.final_cost);
    outputs.set_long("iterations", result.iterations);
    outputs.set("termination",
                result.termination == Termination::tolerance ? "tolerance" : "max_iters");
    write_manifest(outdir / "manifest.txt", "optimize", cfg, outputs, timer.elapsed_ms());
}

void run_dict(const KeyValues& cfg, const fs::path& outdir) {
    const Timer timer;
    const Schedule schedule =
        read_schedule_csv(cfg.get("schedule"), cfg.get_double_or("te_ms", 3.0));
    Dictionary dict = build_dictionary(schedule, parse_grid_spec(cfg.get("t1_grid")),
                                       parse_grid_spec(cfg.get("t2_grid")), epg_from(cfg));
    dict.schedule_id = cfg.get("schedule");
    write_dictionary_csv(outdir / "dictionary.csv", dict);

    KeyValues outputs;
    outputs.set("dictionary", "dictionary.csv");
    outputs.set_long("n_atoms", static_cast<long>(dict.n_atoms()));
    write_manifest(outdir / "manifest.txt", "dict", cfg, outputs, timer.elapsed_ms());
}

void run_match(const KeyValues& cfg, const fs::path& outdir) {
    const Timer timer;
    const Dictionary dict = read_dictionary_csv(cfg.get("dict"));
    const Fingerprint observed = read_fingerprint_csv(cfg.get("signal"));
    const MatchResult result = match(dict, observed);

    std::ofstream out(outdir / "match.csv", std::ios::binary);
    out << "t1_ms,t2_ms,score\n"
        << format_double(result.tissue.t1_ms) << ',' << format_double(result.tissue.t2_ms) << ','
        << format_double(result.score) << '\n';
    out.close();
    std::cout << "match: t1=" << result.tissue.t1_ms << " ms, t2=" << result.tissue.t2_ms
              << " ms, score=" << result.score << '\n';

    KeyValues outputs;
    outputs.set("match", "match.csv");
    write_manifest(outdir / "manifest.txt", "match", cfg, outputs, timer.elapsed_ms());
}

Eigen::ArrayXXd masked_difference(const Eigen::ArrayXXd& estimate, const Eigen::ArrayXXd& truth,
                                  const MaskArray& mask) {
    Eigen::ArrayXXd err = Eigen::ArrayXXd::Zero(truth.rows(), truth.cols());
    for (Eigen::Index y = 0; y < truth.rows(); ++y)
        for (Eigen::Index x = 0; x < truth.cols(); ++x)
            if (mask(y, x)) err(y, x) = estimate(y, x) - truth(y, x);
    return err;
}

void run_evaluate(const KeyValues& cfg, const fs::path& outdir) {
    const Timer timer;
    const Schedule schedule =
        read_schedule_csv(cfg.get("schedule"), cfg.get_double_or("te_ms", 3.0));
    const Phantom phantom = phantom_from(cfg);
    const EpgConfig epg = epg_from(cfg);
    const NoiseModel noise{cfg.get_double("sigma2")};
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long_or("seed", 1));

    const Dictionary dict =
        build_dictionary(schedule, parse_grid_spec(cfg.get_or("t1_grid", "lin:100:4000:79")),
                         parse_grid_spec(cfg.get_or("t2_grid", "log:10:2000:60")), epg);
    const ParameterMaps truth = truth_maps(phantom);
    const Eigen::MatrixXd obs = simulate_acquisition(phantom, schedule, noise, epg, seed);
    const ParameterMaps maps = reconstruct(dict, obs, truth.mask);
    const auto [t1_nmse, t2_nmse] = nmse(maps, truth);

    write_double_grid_csv(outdir / "t1_map.csv", maps.t1_ms);
    write_double_grid_csv(outdir / "t2_map.csv", maps.t2_ms);

    KeyValues outputs;
    outputs.set("t1_map", "t1_map.csv");
    outputs.set("t2_map", "t2_map.csv");
    outputs.set_double("t1_nmse", t1_nmse);
    outputs.set_double("t2_nmse", t2_nmse);
    write_manifest(outdir / "manifest.txt", "evaluate", cfg, outputs, timer.elapsed_ms());
}

void run_compare(const KeyValues& cfg, const fs::path& outdir) {
    const Timer timer;
    const double te_ms = cfg.get_double_or("te_ms", 3.0);
    std::vector<std::pair<std::string, Schedule>> schedules;
    for (const std::string& entry : cfg.get_all("scheme")) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected --scheme name=schedule.csv, got '" + entry + "'");
        schedules.emplace_back(entry.substr(0, eq),
                               read_schedule_csv(entry.substr(eq + 1), te_ms));
    }
    if (schedules.empty()) throw ParseError("compare needs at least one --scheme");

    const Phantom phantom = phantom_from(cfg);
    const EpgConfig epg = epg_from(cfg);
    const NoiseModel noise{cfg.get_double("sigma2")};
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long_or("seed", 1));
    const std::vector<double> t1_grid = parse_grid_spec(cfg.get_or("t1_grid", "lin:100:4000:79"));
    const std::vector<double> t2_grid = parse_grid_spec(cfg.get_or("t2_grid", "log:10:2000:60"));

    const std::vector<SchemeComparison> rows =
        compare_schemes(schedules, phantom, t1_grid, t2_grid, noise, epg, seed);
    write_comparison_csv(outdir / "comparison.csv", rows);

    const ParameterMaps truth = truth_maps(phantom);
    KeyValues outputs;
    outputs.set("comparison", "comparison.csv");
    for (const SchemeComparison& row : rows) {
        write_double_grid_csv(outdir / (row.scheme + "_t1_map.csv"), row.maps.t1_ms);
        write_double_grid_csv(outdir / (row.scheme + "_t2_map.csv"), row.maps.t2_ms);
        write_double_grid_csv(outdir / (row.scheme + "_t1_err.csv"),
                              masked_difference(row.maps.t1_ms, truth.t1_ms, truth.mask));
        write_double_grid_csv(outdir / (row.scheme + "_t2_err.csv"),
                              masked_difference(row.maps.t2_ms, truth.t2_ms, truth.mask));
        outputs.set(row.scheme + "_t1_map", row.scheme + "_t1_map.csv");
        outputs.set(row.scheme + "_t2_map", row.scheme + "_t2_map.csv");
        outputs.set(row.scheme + "_t1_err", row.scheme + "_t1_err.csv");
        outputs.set(row.scheme + "_t2_err", row.scheme + "_t2_err.csv");
        outputs.set_double(row.scheme + "_t1_nmse", row.t1_nmse);
        outputs.set_double(row.scheme + "_t2_nmse", row.t2_nmse);
    }
    write_manifest(outdir / "manifest.txt", "compare", cfg, outputs, timer.elapsed_ms());
}

void dispatch(const std::string& command, const KeyValues& cfg, const fs::path& outdir) {
    ensure_outdir(outdir);
    if (command == "simulate")
        run_simulate(cfg, outdir);
    else if (command == "zzb")
        run_zzb(cfg, outdir);
    else if (command == "crb")
        run_crb(cfg, outdir);
    else if (command == "optimize")
        run_optimize(cfg, outdir);
    else if (command == "dict")
        run_dict(cfg, outdir);
    else if (command == "match")
        run_match(cfg, outdir);
    else if (command == "evaluate")
        run_evaluate(cfg, outdir);
    else if (command == "compare")
        run_compare(cfg, outdir);
    else
        throw ParseError("unknown command '" + command + "'");
}

// Resolves --sigma2 / --target-snr into a concrete sigma2 key. The SNR rule
// pins sigma to (peak conventional fingerprint amplitude over the spec
// center tissues) / snr, so the resolved value lands in the manifest.
void resolve_noise(KeyValues& cfg, double sigma2, double target_snr) {
    if (sigma2 > 0.0) {
        cfg.set_double("sigma2", sigma2);
        return;
    }
    if (!(target_snr > 0.0)) throw ParseError("need --sigma2 or --target-snr");
    DesignProblem problem = problem_from_key_values(cfg);
    problem.noise.sigma2 = 1.0; // placeholder; resolution only reads fingerprints
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long_or("seed", 1));
    cfg.set_double("target_snr", target_snr);
    cfg.set_double("sigma2", resolve_sigma2_for_target_snr(problem, target_snr, seed));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MRF schedule design and evaluation via minimum-error-probability bounds"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    // shared option storage; each subcommand registers what it uses
    std::string schedule_file, config_file, tissue_text, outdir = ".";
    std::string t1_grid, t2_grid, dict_file, signal_file, sweep_text, target_text = "T1";
    std::string phantom_labels, phantom_tissues, objective = "zzb";
    std::vector<std::string> schemes;
    double te_ms = 3.0, sigma2 = 0.0, target_snr = 0.0;
    double rel_tol = 1e-4, fd_rel_step = 1e-3, step_init = 1.0;
    double inversion_efficiency = 1.0;
    long frames = 0, max_iters = -1, n_grid = 0, n_states = 0, seed = 1, mc_trials = 0;
    long spec_index = 0, phantom_width = 64, phantom_height = 64;
    bool with_crb = false;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-o,--outdir", outdir, "Output directory (default .)");
        cmd->add_option("--seed", seed, "Master seed");
    };
    const auto add_schedule = [&](CLI::App* cmd) {
        cmd->add_option("--schedule", schedule_file, "Schedule CSV (frame,fa_deg,tr_ms)")
            ->required();
        cmd->add_option("--te", te_ms, "Echo time in ms (default 3)");
    };
    const auto add_epg = [&](CLI::App* cmd) {
        cmd->add_option("--n-states", n_states, "EPG orders retained (0 = exact)");
        cmd->add_option("--inversion-efficiency", inversion_efficiency,
                        "Initial inversion scale in [0,1]");
    };
    const auto add_phantom = [&](CLI::App* cmd) {
        cmd->add_option("--phantom-labels", phantom_labels, "Label grid CSV");
        cmd->add_option("--phantom-tissues", phantom_tissues, "Tissue table CSV (label,t1_ms,t2_ms)");
        cmd->add_option("--phantom-width", phantom_width, "Synthetic phantom width");
        cmd->add_option("--phantom-height", phantom_height, "Synthetic phantom height");
    };

    CLI::App* c_simulate = app.add_subcommand("simulate", "Fingerprint of one schedule + tissue");
    add_common(c_simulate);
    add_schedule(c_simulate);
    add_epg(c_simulate);
    c_simulate->add_option("--tissue", tissue_text, "T1,T2 in ms");
    c_simulate->add_option("--config", config_file, "Config file with t1_ms / t2_ms keys");

    CLI::App* c_zzb = app.add_subcommand("zzb", "Bound values for tissue specs");
    add_common(c_zzb);
    add_schedule(c_zzb);
    add_epg(c_zzb);
    c_zzb->add_option("--config", config_file, "Problem config with spec lines")->required();
    c_zzb->add_option("--spec-index", spec_index, "1-based spec row (0 = all)");
    c_zzb->add_option("--sigma2", sigma2, "Noise variance");
    c_zzb->add_option("--target-snr", target_snr, "Resolve sigma from peak amplitude / SNR");
    c_zzb->add_option("--sweep-sigma2", sweep_text, "a:b:k geometric sigma2 sweep");
    c_zzb->add_option("--n-grid", n_grid, "Quadrature nodes (default 64)");
    c_zzb->add_flag("--with-crb", with_crb, "Also evaluate the center-tissue CRB");
    c_zzb->add_option("--mc-trials", mc_trials, "Monte-Carlo MSE trials (0 = skip)");

    CLI::App* c_crb = app.add_subcommand("crb", "CRB for one tissue and target parameter");
    add_common(c_crb);
    add_schedule(c_crb);
    add_epg(c_crb);
    c_crb->add_option("--tissue", tissue_text, "T1,T2 in ms")->required();
    c_crb->add_option("--target", target_text, "T1 or T2");
    c_crb->add_option("--sigma2", sigma2, "Noise variance")->required();

    CLI::App* c_optimize = app.add_subcommand("optimize", "Solve the schedule design problem");
    add_common(c_optimize);
    c_optimize->add_option("--config", config_file, "Problem config file")->required();
    c_optimize->add_option("--frames", frames, "Override n_frames");
    c_optimize->add_option("--tol", rel_tol, "Relative cost-change tolerance");
    c_optimize->add_option("--max-iters", max_iters, "Iteration cap");
    c_optimize->add_option("--sigma2", sigma2, "Noise variance for the objective");
    c_optimize->add_option("--target-snr", target_snr, "Resolve sigma2 from target SNR");
    c_optimize->add_option("--n-grid", n_grid, "Override quadrature nodes");
    c_optimize->add_option("--fd-step", fd_rel_step, "Gradient relative step");
    c_optimize->add_option("--step-init", step_init, "Initial step scale");
    c_optimize->add_option("--objective", objective, "zzb (default) or crb");

    CLI::App* c_dict = app.add_subcommand("dict", "Build a matching dictionary");
    add_common(c_dict);
    add_schedule(c_dict);
    add_epg(c_dict);
    c_dict->add_option("--t1-grid", t1_grid, "lin:lo:hi:count or log:lo:hi:count");
    c_dict->add_option("--t2-grid", t2_grid, "lin:lo:hi:count or log:lo:hi:count");

    CLI::App* c_match = app.add_subcommand("match", "Match one fingerprint to a dictionary");
    add_common(c_match);
    c_match->add_option("--dict", dict_file, "Dictionary CSV")->required();
    c_match->add_option("--signal", signal_file, "Fingerprint CSV")->required();

    CLI::App* c_evaluate = app.add_subcommand("evaluate", "Phantom reconstruction for one schedule");
    add_common(c_evaluate);
    add_schedule(c_evaluate);
    add_epg(c_evaluate);
    add_phantom(c_evaluate);
    c_evaluate->add_option("--sigma2", sigma2, "Noise variance")->required();
    c_evaluate->add_option("--t1-grid", t1_grid, "Dictionary T1 grid");
    c_evaluate->add_option("--t2-grid", t2_grid, "Dictionary T2 grid");

    CLI::App* c_compare = app.add_subcommand("compare", "NMSE comparison of named schemes");
    add_common(c_compare);
    add_epg(c_compare);
    add_phantom(c_compare);
    c_compare->add_option("--scheme", schemes, "name=schedule.csv (repeatable)")->required();
    c_compare->add_option("--te", te_ms, "Echo time in ms (default 3)");
    c_compare->add_option("--sigma2", sigma2, "Noise variance")->required();
    c_compare->add_option("--t1-grid", t1_grid, "Dictionary T1 grid");
    c_compare->add_option("--t2-grid", t2_grid, "Dictionary T2 grid");

    CLI::App* c_rerun = app.add_subcommand("rerun", "Re-run a command from its manifest");
    std::string manifest_file;
    c_rerun->add_option("manifest", manifest_file, "manifest.txt of a previous run")->required();
    c_rerun->add_option("-o,--outdir", outdir, "Output directory (default .)");

    CLI11_PARSE(app, argc, argv);

    try {
        KeyValues cfg;
        const CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();

        if (name == "rerun") {
            const Manifest manifest = read_manifest(manifest_file);
            dispatch(manifest.command, manifest.cfg, outdir);
            return 0;
        }

        if (name == "simulate") {
            cfg.set("schedule", schedule_file);
            cfg.set_double("te_ms", te_ms);
            Tissue tissue{0.0, 0.0};
            if (!tissue_text.empty())
                tissue = parse_tissue(tissue_text);
            else if (!config_file.empty()) {
                const KeyValues file = parse_key_values(config_file);
                tissue = {file.get_double("t1_ms"), file.get_double("t2_ms")};
            } else
                throw ParseError("simulate needs --tissue or --config");
            cfg.set_double("t1_ms", tissue.t1_ms);
            cfg.set_double("t2_ms", tissue.t2_ms);
            cfg.set_long("n_states", n_states);
            cfg.set_double("inversion_efficiency", inversion_efficiency);
        } else if (name == "zzb") {
            cfg.set("schedule", schedule_file);
            cfg.set_double("te_ms", te_ms);
            cfg.set_long("n_states", n_states);
            cfg.set_double("inversion_efficiency", inversion_efficiency);
            cfg.set_long("seed", seed);
            const KeyValues file = parse_key_values(config_file);
            std::vector<TissueSpec> specs;
            for (const std::string& line : file.get_all("spec"))
                specs.push_back(parse_spec_line(line, config_file));
            if (specs.empty()) throw ParseError(config_file + ": no spec lines");
            for (std::size_t i = 0; i < specs.size(); ++i) {
                if (spec_index != 0 && static_cast<long>(i + 1) != spec_index) continue;
                cfg.set("spec", format_spec_line(specs[i]));
                cfg.set("spec_id", std::to_string(i + 1));
            }
            if (n_grid > 0) cfg.set_long("n_grid", n_grid);
            if (with_crb) cfg.set_long("with_crb", 1);
            if (mc_trials > 0) cfg.set_long("mc_trials", mc_trials);
            if (!sweep_text.empty()) {
                cfg.set("sweep_sigma2", sweep_text);
            } else {
                // the SNR rule needs a frame count: take it from the schedule
                if (!(sigma2 > 0.0)) {
                    const Schedule s = read_schedule_csv(schedule_file, te_ms);
                    KeyValues tmp = cfg;
                    tmp.set_long("n_frames", s.n_frames());
                    resolve_noise(tmp, sigma2, target_snr);
                    cfg.set_double("sigma2", tmp.get_double("sigma2"));
                    if (tmp.has("target_snr"))
                        cfg.set_double("target_snr", tmp.get_double("target_snr"));
                } else {
                    cfg.set_double("sigma2", sigma2);
                }
            }
        } else if (name == "crb") {
            cfg.set("schedule", schedule_file);
            cfg.set_double("te_ms", te_ms);
            cfg.set_long("n_states", n_states);
            cfg.set_double("inversion_efficiency", inversion_efficiency);
            const Tissue tissue = parse_tissue(tissue_text);
            cfg.set_double("t1_ms", tissue.t1_ms);
            cfg.set_double("t2_ms", tissue.t2_ms);
            cfg.set("target", target_text);
            cfg.set_double("sigma2", sigma2);
        } else if (name == "optimize") {
            KeyValues file = parse_key_values(config_file);
            if (frames > 0) {
                KeyValues overridden;
                overridden.set_long("n_frames", frames);
                for (const auto& [k, v] : file.items())
                    if (k != "n_frames") overridden.set(k, v);
                file = overridden;
            }
            DesignProblem problem = problem_from_key_values(file);
            if (n_grid > 0) problem.quad.n_grid = static_cast<int>(n_grid);
            cfg = key_values_from_problem(problem);
            cfg.set_long("seed", seed);
            cfg.set_long("max_iters", max_iters >= 0 ? max_iters : 100);
            cfg.set_double("rel_tol", rel_tol);
            cfg.set_double("fd_rel_step", fd_rel_step);
            cfg.set_double("step_init", step_init);
            cfg.set("objective", objective);
            if (!(sigma2 > 0.0) && file.has("sigma2")) sigma2 = file.get_double("sigma2");
            if (!(target_snr > 0.0) && !(sigma2 > 0.0))
                target_snr = file.get_double_or("target_snr", 30.0);
            {
                KeyValues resolved;
                for (const auto& [k, v] : cfg.items())
                    if (k != "sigma2") resolved.set(k, v);
                resolve_noise(resolved, sigma2, target_snr);
                cfg = resolved;
            }
        } else if (name == "dict") {
            cfg.set("schedule", schedule_file);
            cfg.set_double("te_ms", te_ms);
            cfg.set_long("n_states", n_states);
            cfg.set_double("inversion_efficiency", inversion_efficiency);
            cfg.set("t1_grid", t1_grid.empty() ? "lin:100:4000:79" : t1_grid);
            cfg.set("t2_grid", t2_grid.empty() ? "log:10:2000:60" : t2_grid);
        } else if (name == "match") {
            cfg.set("dict", dict_file);
            cfg.set("signal", signal_file);
        } else if (name == "evaluate" || name == "compare") {
            if (name == "evaluate") {
                cfg.set("schedule", schedule_file);
            } else {
                for (const std::string& scheme : schemes) cfg.set("scheme", scheme);
            }
            cfg.set_double("te_ms", te_ms);
            cfg.set_long("n_states", n_states);
            cfg.set_double("inversion_efficiency", inversion_efficiency);
            cfg.set_long("seed", seed);
            cfg.set_double("sigma2", sigma2);
            cfg.set("t1_grid", t1_grid.empty() ? "lin:100:4000:79" : t1_grid);
            cfg.set("t2_grid", t2_grid.empty() ? "log:10:2000:60" : t2_grid);
            if (!phantom_labels.empty() || !phantom_tissues.empty()) {
                if (phantom_labels.empty() || phantom_tissues.empty())
                    throw ParseError("--phantom-labels and --phantom-tissues go together");
                cfg.set("phantom", "files");
                cfg.set("phantom_labels", phantom_labels);
                cfg.set("phantom_tissues", phantom_tissues);
            } else {
                cfg.set("phantom", "synthetic");
                cfg.set_long("phantom_width", phantom_width);
                cfg.set_long("phantom_height", phantom_height);
            }
        }

        dispatch(name, cfg, outdir);
        return 0;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitParse;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition error: " << e.what() << '\n';
        return kExitPrecondition;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
