#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrf/bounds.hpp"
#include "mrf/types.hpp"

namespace mrf {

/// Constrained experiment-design instance: the weighted tissue specs, the
/// noise level the bound is evaluated at, and per-frame box plus flip-angle
/// slew constraints. The first slew gap is conventionally unconstrained;
/// represent that with a large finite sentinel (kUnconstrainedSlewDeg).
struct DesignProblem {
    std::vector<TissueSpec> specs;
    NoiseModel noise;
    int n_frames = 0;
    Eigen::VectorXd fa_min_deg, fa_max_deg; ///< per frame
    Eigen::VectorXd tr_min_ms, tr_max_ms;   ///< per frame
    Eigen::VectorXd fa_slew_max_deg;        ///< per gap, length n_frames - 1
    double echo_time_ms = 3.0;
    QuadratureConfig quad;
    EpgConfig epg;
};

inline constexpr double kUnconstrainedSlewDeg = 1e6;

struct SolverConfig {
    int max_iters = 100;
    double rel_tol = 1e-4;     ///< stop when |f_k - f_{k-1}| / |f_{k-1}| < rel_tol
    double fd_rel_step = 1e-3; ///< relative step of the cost gradient
    double step_init = 1.0;    ///< first trial move, in degrees / ms
};

enum class Termination { tolerance, max_iters };

struct OptimizationResult {
    Schedule schedule;
    std::vector<double> cost_history; ///< initial cost followed by accepted iterates
    double initial_cost = 0.0;
    double final_cost = 0.0;
    int iterations = 0;
    Termination termination = Termination::tolerance;
};

struct Violation {
    enum class Kind { fa_box, tr_box, fa_slew };
    Kind kind;
    int frame;     ///< 1-based frame (or gap) index
    double margin; ///< amount by which the constraint is exceeded
};

std::string to_string(const Violation& v);

/// Feasibility report thrown by operations that require a feasible schedule.
struct ConstraintViolationError : PreconditionError {
    explicit ConstraintViolationError(std::vector<Violation> violations);
    std::vector<Violation> violations;
};

void validate(const DesignProblem& problem);
void validate(const SolverConfig& solver);

/// Box and slew constraints checked to 1e-9 absolute (degrees / ms). Empty
/// result means feasible.
std::vector<Violation> check_feasibility(const Schedule& schedule, const DesignProblem& problem);

/// Sum over specs of weight * zzb. Zero-weight specs are skipped. Throws
/// ConstraintViolationError when the schedule is infeasible for the problem.
double weighted_cost(const Schedule& schedule, const DesignProblem& problem);

/// The central-finite-difference gradient of the design objective with
/// respect to [fa_1..fa_N, tr_1..tr_N]. Exposed for diagnostics and tests.
Eigen::VectorXd objective_gradient(const Schedule& schedule, const DesignProblem& problem,
                                   const SolverConfig& solver);

/// Nearest feasible point by iterative clipping: per-frame boxes first, then
/// a forward sweep of the slew band, repeated to a 1e-12 fixed point.
Schedule project_feasible(const Schedule& schedule, const DesignProblem& problem);

/// Projected-gradient descent with a monotone Armijo line search and
/// Barzilai-Borwein step scaling. Iterates stay feasible; only improving
/// steps are accepted; terminates on relative cost change below rel_tol or
/// at max_iters.
OptimizationResult optimize(const Schedule& initial, const DesignProblem& problem,
                            const SolverConfig& solver);

/// Same solver on the comparison objective: sum of weight * crb at each
/// spec's center tissue.
OptimizationResult optimize_crb(const Schedule& initial, const DesignProblem& problem,
                                const SolverConfig& solver);

/// Stand-in for the truncated conventional acquisition scheme: sinusoidal
/// flip-angle lobes alpha_n = 10 + 50*|sin(pi*n/200)| with a 180-degree
/// first frame, repetition times seeded uniformly in [12, 15] ms, and a
/// 3 ms echo time.
Schedule conventional_schedule(int n_frames, std::uint64_t seed);

/// Conventional schedule adapted to a problem: echo time taken from the
/// problem, first frame set to 180 degrees only when the first-frame bound
/// allows it (else mid-bound), everything clipped and projected feasible.
Schedule initial_schedule_for(const DesignProblem& problem, std::uint64_t seed);

/// sigma^2 such that the conventional schedule's peak fingerprint amplitude
/// over the problem's center tissues has the requested SNR.
double resolve_sigma2_for_target_snr(const DesignProblem& problem, double target_snr,
                                     std::uint64_t seed);

} // namespace mrf
