#include "mrf/seqopt.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "mrf/epg.hpp"
#include "mrf/parallel.hpp"
#include "mrf/rng.hpp"

namespace mrf {
namespace {

constexpr double kFeasibilityTol = 1e-9;
constexpr double kProjectionTol = 1e-12;

// Physical walls for finite-difference probes: flip angles must stay in
// (0, 180] and repetition times above the echo time regardless of the
// design boxes, which probe points may step outside of.
struct ProbeWalls {
    double fa_floor = 1e-6;
    double fa_ceil = 180.0;
    double tr_floor = 0.0;
};

Eigen::VectorXd pack(const Schedule& s) {
    Eigen::VectorXd x(2 * s.n_frames());
    x << s.fa_deg, s.tr_ms;
    return x;
}

Schedule unpack(const Eigen::VectorXd& x, double te_ms) {
    const Eigen::Index n = x.size() / 2;
    return Schedule{x.head(n), x.tail(n), te_ms};
}

std::vector<std::size_t> active_specs(const DesignProblem& problem) {
    std::vector<std::size_t> active;
    for (std::size_t l = 0; l < problem.specs.size(); ++l)
        if (problem.specs[l].weight > 0.0) active.push_back(l);
    return active;
}

// Design objective without the feasibility gate, usable at finite-difference
// probe points. Fingerprint grids for all (spec, node) pairs are filled by
// one flat parallel map; the weighted sum runs in ascending spec order so
// the value is reproducible for any thread count.
double weighted_zzb_raw(const Schedule& schedule, const DesignProblem& problem) {
    const std::vector<std::size_t> active = active_specs(problem);
    if (active.empty()) return 0.0;

    const int g = problem.quad.n_grid;
    std::vector<Eigen::MatrixXd> grids(active.size());
    for (auto& grid : grids) grid.resize(schedule.n_frames(), g);

    parallel_for(active.size() * static_cast<std::size_t>(g), [&](std::size_t task) {
        const std::size_t a = task / static_cast<std::size_t>(g);
        const int node = static_cast<int>(task % static_cast<std::size_t>(g));
        const TissueSpec& spec = problem.specs[active[a]];
        const double theta = spec.range_min + spec.delta() / (g - 1) * node;
        grids[a].col(node) = simulate_fingerprint(schedule, spec.tissue_at(theta), problem.epg);
    });

    double cost = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
        const TissueSpec& spec = problem.specs[active[a]];
        cost += spec.weight * zzb_from_grid(grids[a], spec.delta(), problem.noise.sigma2);
    }
    return cost;
}

double weighted_crb_raw(const Schedule& schedule, const DesignProblem& problem) {
    const std::vector<std::size_t> active = active_specs(problem);
    if (active.empty()) return 0.0;

    std::vector<double> terms(active.size(), 0.0);
    parallel_for(active.size(), [&](std::size_t a) {
        const TissueSpec& spec = problem.specs[active[a]];
        terms[a] = spec.weight * crb(schedule, spec.center_tissue(), problem.noise, problem.epg,
                                     spec.varying);
    });

    double cost = 0.0;
    for (const double term : terms) cost += term;
    return cost;
}

using VectorCost = std::function<double(const Eigen::VectorXd&)>;

Eigen::VectorXd fd_gradient(const Eigen::VectorXd& x, double te_ms, double fd_rel_step,
                            const VectorCost& cost) {
    const Eigen::Index n = x.size() / 2;
    const ProbeWalls walls{1e-6, 180.0, te_ms * (1.0 + 1e-9) + 1e-9};
    Eigen::VectorXd grad(x.size());

    parallel_for(static_cast<std::size_t>(x.size()), [&](std::size_t idx) {
        const Eigen::Index i = static_cast<Eigen::Index>(idx);
        const bool is_fa = i < n;
        const double h = fd_rel_step * std::max(std::abs(x[i]), 1.0);
        double up = x[i] + h;
        double dn = x[i] - h;
        if (is_fa) {
            up = std::min(up, walls.fa_ceil);
            dn = std::max(dn, walls.fa_floor);
        } else {
            dn = std::max(dn, walls.tr_floor);
        }
        if (!(up > dn))
            throw NumericError("degenerate finite-difference step at variable " +
                               std::to_string(i + 1));
        Eigen::VectorXd probe = x;
        try {
            probe[i] = up;
            const double f_up = cost(probe);
            probe[i] = dn;
            const double f_dn = cost(probe);
            grad[i] = (f_up - f_dn) / (up - dn);
        } catch (const Error& e) {
            throw NumericError("gradient evaluation failed at variable " + std::to_string(i + 1) +
                               ": " + e.what());
        }
    });
    return grad;
}

OptimizationResult optimize_with(const VectorCost& cost, const Schedule& initial,
                                 const DesignProblem& problem, const SolverConfig& solver) {
    validate(problem);
    validate(solver);
    {
        std::vector<Violation> violations = check_feasibility(initial, problem);
        if (!violations.empty()) throw ConstraintViolationError(std::move(violations));
    }

    const auto project = [&](const Eigen::VectorXd& x) {
        return pack(project_feasible(unpack(x, problem.echo_time_ms), problem));
    };

    Eigen::VectorXd x = pack(initial);
    double f = cost(x);
    OptimizationResult result;
    result.initial_cost = f;
    result.cost_history.push_back(f);
    result.termination = Termination::max_iters;

    if (solver.max_iters > 0) {
        Eigen::VectorXd g = fd_gradient(x, problem.echo_time_ms, solver.fd_rel_step, cost);
        double step = solver.step_init / std::max(g.cwiseAbs().maxCoeff(), 1e-30);
        bool retried_fresh_step = false;

        for (int iter = 1; iter <= solver.max_iters; ++iter) {
            result.iterations = iter;

            Eigen::VectorXd d = project(x - step * g) - x;
            double gd = g.dot(d);
            // The clip projection is not the exact Euclidean one, so force a
            // descent direction by shrinking the trial step when needed.
            for (int shrink = 0; gd >= 0.0 && d.cwiseAbs().maxCoeff() > kProjectionTol &&
                                 shrink < 30;
                 ++shrink) {
                step *= 0.25;
                d = project(x - step * g) - x;
                gd = g.dot(d);
            }
            if (d.cwiseAbs().maxCoeff() <= kProjectionTol || gd >= 0.0) {
                result.termination = Termination::tolerance;
                break;
            }

            // Monotone Armijo search along the feasible segment x + lambda*d.
            double lambda = 1.0;
            bool accepted = false;
            Eigen::VectorXd x_next;
            double f_next = f;
            for (int ls = 0; ls < 40; ++ls) {
                x_next = x + lambda * d;
                f_next = cost(x_next);
                if (f_next <= f + 1e-4 * lambda * gd) {
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if (!accepted) {
                // A failed search usually means the scaled step projected
                // onto a bad arc of the constraint set; retry once from a
                // fresh gradient-sized step before declaring convergence.
                if (!retried_fresh_step) {
                    retried_fresh_step = true;
                    step = solver.step_init / std::max(g.cwiseAbs().maxCoeff(), 1e-30);
                    continue;
                }
                result.termination = Termination::tolerance;
                break;
            }
            retried_fresh_step = false;

            const Eigen::VectorXd g_next =
                fd_gradient(x_next, problem.echo_time_ms, solver.fd_rel_step, cost);
            const Eigen::VectorXd s = x_next - x;
            const Eigen::VectorXd y = g_next - g;
            const double sy = s.dot(y);
            step = sy > 1e-16 ? std::clamp(s.squaredNorm() / sy, 1e-8, 1e8)
                              : std::min(step * 2.0, 1e8);

            const double f_prev = f;
            x = x_next;
            f = f_next;
            g = g_next;
            result.cost_history.push_back(f);

            if (std::abs(f - f_prev) <= solver.rel_tol * std::max(std::abs(f_prev), DBL_MIN)) {
                result.termination = Termination::tolerance;
                break;
            }
        }
    }

    result.schedule = unpack(x, problem.echo_time_ms);
    result.final_cost = f;
    return result;
}

} // namespace

std::string to_string(const Violation& v) {
    std::ostringstream os;
    switch (v.kind) {
    case Violation::Kind::fa_box: os << "flip-angle box at frame "; break;
    case Violation::Kind::tr_box: os << "repetition-time box at frame "; break;
    case Violation::Kind::fa_slew: os << "flip-angle slew at gap "; break;
    }
    os << v.frame << " (margin " << v.margin << ")";
    return os.str();
}

ConstraintViolationError::ConstraintViolationError(std::vector<Violation> v)
    : PreconditionError([&v] {
          std::string msg = "schedule violates " + std::to_string(v.size()) + " constraint(s):";
          for (const Violation& violation : v) msg += " " + to_string(violation) + ";";
          return msg;
      }()),
      violations(std::move(v)) {}

void validate(const DesignProblem& problem) {
    if (problem.n_frames < 1) throw PreconditionError("design problem needs at least one frame");
    const Eigen::Index n = problem.n_frames;
    if (problem.fa_min_deg.size() != n || problem.fa_max_deg.size() != n ||
        problem.tr_min_ms.size() != n || problem.tr_max_ms.size() != n)
        throw PreconditionError("per-frame bound vectors must have length n_frames");
    if (problem.fa_slew_max_deg.size() != n - 1)
        throw PreconditionError("slew bound vector must have length n_frames - 1");
    if (!(problem.echo_time_ms > 0.0))
        throw PreconditionError("echo time must be positive");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(problem.fa_min_deg[i]) || !std::isfinite(problem.fa_max_deg[i]) ||
            !(problem.fa_min_deg[i] < problem.fa_max_deg[i]))
            throw PreconditionError("flip-angle bounds must be finite with min < max at frame " +
                                    std::to_string(i + 1));
        if (!(problem.fa_min_deg[i] > 0.0) || problem.fa_max_deg[i] > 180.0)
            throw PreconditionError("flip-angle bounds must lie in (0, 180] at frame " +
                                    std::to_string(i + 1));
        if (!std::isfinite(problem.tr_min_ms[i]) || !std::isfinite(problem.tr_max_ms[i]) ||
            !(problem.tr_min_ms[i] < problem.tr_max_ms[i]))
            throw PreconditionError(
                "repetition-time bounds must be finite with min < max at frame " +
                std::to_string(i + 1));
        if (!(problem.tr_min_ms[i] > problem.echo_time_ms))
            throw PreconditionError("repetition-time lower bound must exceed the echo time");
    }
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        if (!(problem.fa_slew_max_deg[i] > 0.0))
            throw PreconditionError("slew bounds must be positive");
    if (problem.specs.empty()) throw PreconditionError("design problem needs at least one spec");
    for (const TissueSpec& spec : problem.specs) validate(spec);
    validate(problem.noise);
    validate(problem.quad);
    validate(problem.epg);
}

void validate(const SolverConfig& solver) {
    if (solver.max_iters < 0) throw PreconditionError("max_iters must be nonnegative");
    if (!(solver.rel_tol > 0.0 && solver.rel_tol < 1.0))
        throw PreconditionError("rel_tol must lie in (0, 1)");
    if (!(solver.fd_rel_step > 0.0 && solver.fd_rel_step <= 0.1))
        throw PreconditionError("fd_rel_step must lie in (0, 0.1]");
    if (!(solver.step_init > 0.0)) throw PreconditionError("step_init must be positive");
}

std::vector<Violation> check_feasibility(const Schedule& schedule, const DesignProblem& problem) {
    if (schedule.n_frames() != problem.n_frames)
        throw PreconditionError("schedule has " + std::to_string(schedule.n_frames()) +
                                " frames but the problem expects " +
                                std::to_string(problem.n_frames));
    if (std::abs(schedule.te_ms - problem.echo_time_ms) > kFeasibilityTol)
        throw PreconditionError("schedule echo time differs from the design problem's");

    std::vector<Violation> violations;
    for (Eigen::Index i = 0; i < schedule.n_frames(); ++i) {
        const double fa = schedule.fa_deg[i];
        if (fa < problem.fa_min_deg[i] - kFeasibilityTol)
            violations.push_back({Violation::Kind::fa_box, static_cast<int>(i + 1),
                                  problem.fa_min_deg[i] - fa});
        else if (fa > problem.fa_max_deg[i] + kFeasibilityTol)
            violations.push_back({Violation::Kind::fa_box, static_cast<int>(i + 1),
                                  fa - problem.fa_max_deg[i]});
        const double tr = schedule.tr_ms[i];
        if (tr < problem.tr_min_ms[i] - kFeasibilityTol)
            violations.push_back({Violation::Kind::tr_box, static_cast<int>(i + 1),
                                  problem.tr_min_ms[i] - tr});
        else if (tr > problem.tr_max_ms[i] + kFeasibilityTol)
            violations.push_back({Violation::Kind::tr_box, static_cast<int>(i + 1),
                                  tr - problem.tr_max_ms[i]});
    }
    for (Eigen::Index i = 0; i + 1 < schedule.n_frames(); ++i) {
        const double gap = std::abs(schedule.fa_deg[i + 1] - schedule.fa_deg[i]);
        if (gap > problem.fa_slew_max_deg[i] + kFeasibilityTol)
            violations.push_back({Violation::Kind::fa_slew, static_cast<int>(i + 1),
                                  gap - problem.fa_slew_max_deg[i]});
    }
    return violations;
}

double weighted_cost(const Schedule& schedule, const DesignProblem& problem) {
    validate(problem);
    std::vector<Violation> violations = check_feasibility(schedule, problem);
    if (!violations.empty()) throw ConstraintViolationError(std::move(violations));
    return weighted_zzb_raw(schedule, problem);
}

Eigen::VectorXd objective_gradient(const Schedule& schedule, const DesignProblem& problem,
                                   const SolverConfig& solver) {
    validate(problem);
    validate(solver);
    return fd_gradient(pack(schedule), problem.echo_time_ms, solver.fd_rel_step,
                       [&](const Eigen::VectorXd& x) {
                           return weighted_zzb_raw(unpack(x, problem.echo_time_ms), problem);
                       });
}

Schedule project_feasible(const Schedule& schedule, const DesignProblem& problem) {
    if (schedule.n_frames() != problem.n_frames)
        throw PreconditionError("schedule length does not match the design problem");
    Eigen::VectorXd fa = schedule.fa_deg;
    Eigen::VectorXd tr = schedule.tr_ms;
    const Eigen::Index n = problem.n_frames;

    for (int pass = 0; pass < 64; ++pass) {
        bool changed = false;
        const auto clip = [&changed](double v, double lo, double hi) {
            const double c = std::clamp(v, lo, hi);
            if (std::abs(c - v) > kProjectionTol) changed = true;
            return c;
        };
        for (Eigen::Index i = 0; i < n; ++i) {
            fa[i] = clip(fa[i], problem.fa_min_deg[i], problem.fa_max_deg[i]);
            tr[i] = clip(tr[i], problem.tr_min_ms[i], problem.tr_max_ms[i]);
        }
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            const double lo = std::max(problem.fa_min_deg[i + 1], fa[i] - problem.fa_slew_max_deg[i]);
            const double hi = std::min(problem.fa_max_deg[i + 1], fa[i] + problem.fa_slew_max_deg[i]);
            if (lo > hi + kFeasibilityTol)
                throw PreconditionError(
                    "box and slew constraints are jointly infeasible at gap " +
                    std::to_string(i + 1));
            fa[i + 1] = clip(fa[i + 1], std::min(lo, hi), std::max(lo, hi));
        }
        if (!changed) break;
    }
    return Schedule{std::move(fa), std::move(tr), problem.echo_time_ms};
}

OptimizationResult optimize(const Schedule& initial, const DesignProblem& problem,
                            const SolverConfig& solver) {
    return optimize_with(
        [&](const Eigen::VectorXd& x) {
            return weighted_zzb_raw(unpack(x, problem.echo_time_ms), problem);
        },
        initial, problem, solver);
}

OptimizationResult optimize_crb(const Schedule& initial, const DesignProblem& problem,
                                const SolverConfig& solver) {
    return optimize_with(
        [&](const Eigen::VectorXd& x) {
            return weighted_crb_raw(unpack(x, problem.echo_time_ms), problem);
        },
        initial, problem, solver);
}

Schedule conventional_schedule(int n_frames, std::uint64_t seed) {
    if (n_frames < 1) throw PreconditionError("n_frames must be positive");
    Eigen::VectorXd fa(n_frames);
    for (int i = 0; i < n_frames; ++i)
        fa[i] = 10.0 + 50.0 * std::abs(std::sin(std::numbers::pi * (i + 1) / 200.0));
    fa[0] = 180.0; // inversion-like first excitation

    SplitMix64 rng(seed);
    Eigen::VectorXd tr(n_frames);
    for (int i = 0; i < n_frames; ++i) tr[i] = 12.0 + 3.0 * rng.uniform01();
    return Schedule{std::move(fa), std::move(tr), 3.0};
}

Schedule initial_schedule_for(const DesignProblem& problem, std::uint64_t seed) {
    validate(problem);
    Schedule s = conventional_schedule(problem.n_frames, seed);
    s.te_ms = problem.echo_time_ms;
    s.fa_deg[0] = problem.fa_max_deg[0] >= 180.0 - kFeasibilityTol
                      ? 180.0
                      : 0.5 * (problem.fa_min_deg[0] + problem.fa_max_deg[0]);
    for (Eigen::Index i = 1; i < s.n_frames(); ++i)
        s.fa_deg[i] = std::clamp(s.fa_deg[i], problem.fa_min_deg[i], problem.fa_max_deg[i]);
    for (Eigen::Index i = 0; i < s.n_frames(); ++i)
        s.tr_ms[i] = std::clamp(s.tr_ms[i], problem.tr_min_ms[i], problem.tr_max_ms[i]);
    return project_feasible(s, problem);
}

double resolve_sigma2_for_target_snr(const DesignProblem& problem, double target_snr,
                                     std::uint64_t seed) {
    if (!(target_snr > 0.0)) throw PreconditionError("target SNR must be positive");
    Schedule conv = conventional_schedule(problem.n_frames, seed);
    conv.te_ms = problem.echo_time_ms;
    double peak = 0.0;
    for (const TissueSpec& spec : problem.specs) {
        const Fingerprint m = simulate_fingerprint(conv, spec.center_tissue(), problem.epg);
        peak = std::max(peak, m.cwiseAbs().maxCoeff());
    }
    if (!(peak > 0.0)) throw NumericError("conventional fingerprints have zero amplitude");
    const double sigma = peak / target_snr;
    return sigma * sigma;
}

} // namespace mrf
