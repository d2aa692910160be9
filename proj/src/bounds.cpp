#include "mrf/bounds.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "mrf/epg.hpp"
#include "mrf/parallel.hpp"
#include "mrf/rng.hpp"

namespace mrf {
namespace {

constexpr double kCrbRelStep = 1e-3;

// Fixed trial-block size; partial sums are reduced block-ascending so the
// result is independent of the worker count.
constexpr std::int64_t kTrialBlock = 1024;

void require_same_length(const Fingerprint& a, const Fingerprint& b) {
    if (a.size() != b.size())
        throw PreconditionError("fingerprint lengths differ (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
}

} // namespace

Tissue TissueSpec::tissue_at(double theta) const {
    return varying == Param::T1 ? Tissue{theta, fixed_other} : Tissue{fixed_other, theta};
}

void validate(const TissueSpec& spec) {
    if (!(spec.range_min > 0.0) || !(spec.range_max > spec.range_min))
        throw PreconditionError("spec range must satisfy 0 < range_min < range_max");
    if (!(spec.fixed_other > 0.0))
        throw PreconditionError("fixed complementary parameter must be positive");
    if (!(spec.weight >= 0.0)) throw PreconditionError("spec weight must be nonnegative");
}

void validate(const NoiseModel& noise) {
    if (!(noise.sigma2 > 0.0) || !std::isfinite(noise.sigma2))
        throw PreconditionError("noise variance must be positive and finite");
}

void validate(const QuadratureConfig& quad) {
    if (quad.n_grid < 16) throw PreconditionError("n_grid must be at least 16");
}

double q_function(double x) {
    if (!std::isfinite(x)) throw PreconditionError("q_function requires a finite argument");
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double llr_mean(const Fingerprint& m_a, const Fingerprint& m_b, const NoiseModel& noise) {
    require_same_length(m_a, m_b);
    validate(noise);
    return (m_a - m_b).squaredNorm() / (2.0 * noise.sigma2);
}

double pmin(const Fingerprint& m_a, const Fingerprint& m_b, const NoiseModel& noise) {
    require_same_length(m_a, m_b);
    validate(noise);
    return q_function((m_a - m_b).norm() / (2.0 * std::sqrt(noise.sigma2)));
}

Eigen::MatrixXd fingerprint_grid(const Schedule& schedule, const TissueSpec& spec,
                                 const EpgConfig& cfg, int n_grid) {
    validate(spec);
    if (n_grid < 2) throw PreconditionError("fingerprint grid needs at least 2 nodes");
    const double h = spec.delta() / (n_grid - 1);
    Eigen::MatrixXd grid(schedule.n_frames(), n_grid);
    parallel_for(static_cast<std::size_t>(n_grid), [&](std::size_t i) {
        grid.col(static_cast<Eigen::Index>(i)) =
            simulate_fingerprint(schedule, spec.tissue_at(spec.range_min + h * i), cfg);
    });
    return grid;
}

double zzb_from_grid(const Eigen::MatrixXd& grid, double delta, double sigma2) {
    const Eigen::Index g = grid.cols();
    if (g < 2) throw PreconditionError("zzb grid needs at least 2 nodes");
    if (!(delta > 0.0)) throw PreconditionError("prior range must be positive");
    if (!(sigma2 > 0.0)) throw PreconditionError("noise variance must be positive");

    const double h = delta / static_cast<double>(g - 1);
    const double two_sigma = 2.0 * std::sqrt(sigma2);

    double outer = 0.0;
    for (Eigen::Index k = 1; k < g; ++k) {
        const Eigen::Index nodes = g - k; // inner domain [min, max - xi_k]
        if (nodes < 2) continue;          // zero-width inner integral
        double inner = 0.0;
        for (Eigen::Index i = 0; i < nodes; ++i) {
            const double q = q_function((grid.col(i) - grid.col(i + k)).norm() / two_sigma);
            inner += (i == 0 || i == nodes - 1) ? 0.5 * q : q;
        }
        inner *= h;
        const double w = (k == g - 1) ? 0.5 : 1.0; // trapezoid end weight in xi
        outer += w * (static_cast<double>(k) * h) * inner;
    }
    return outer * h / delta;
}

double zzb(const Schedule& schedule, const TissueSpec& spec, const NoiseModel& noise,
           const EpgConfig& cfg, const QuadratureConfig& quad) {
    validate(noise);
    validate(quad);
    return zzb_from_grid(fingerprint_grid(schedule, spec, cfg, quad.n_grid), spec.delta(),
                         noise.sigma2);
}

double crb_from_derivative(const Eigen::VectorXd& derivative, const NoiseModel& noise) {
    validate(noise);
    const double sum_sq = derivative.squaredNorm();
    if (sum_sq == 0.0)
        throw NonIdentifiableError("signal derivative vanishes; parameter is non-identifiable");
    return noise.sigma2 / sum_sq;
}

double crb(const Schedule& schedule, const Tissue& tissue, const NoiseModel& noise,
           const EpgConfig& cfg, Param target) {
    return crb_from_derivative(signal_derivative(schedule, tissue, cfg, target, kCrbRelStep),
                               noise);
}

double monte_carlo_pmin(const Fingerprint& m_a, const Fingerprint& m_b,
                        const NoiseModel& noise, std::int64_t n_trials, std::uint64_t seed) {
    require_same_length(m_a, m_b);
    validate(noise);
    if (n_trials < 10000) throw PreconditionError("monte_carlo_pmin needs at least 1e4 trials");

    const Eigen::Index n = m_a.size();
    const double sigma = std::sqrt(noise.sigma2);
    const std::int64_t n_blocks = (n_trials + kTrialBlock - 1) / kTrialBlock;
    std::vector<std::int64_t> block_errors(static_cast<std::size_t>(n_blocks), 0);

    parallel_for(static_cast<std::size_t>(n_blocks), [&](std::size_t b) {
        const std::int64_t begin = static_cast<std::int64_t>(b) * kTrialBlock;
        const std::int64_t end = std::min(n_trials, begin + kTrialBlock);
        Eigen::VectorXd s(n);
        std::int64_t errors = 0;
        for (std::int64_t t = begin; t < end; ++t) {
            SplitMix64 rng(substream(seed, static_cast<std::uint64_t>(t)));
            const bool truth_is_b = (rng.next() & 1u) != 0;
            const Fingerprint& truth = truth_is_b ? m_b : m_a;
            for (Eigen::Index i = 0; i < n; ++i) s[i] = truth[i] + sigma * rng.normal();
            const double da = (s - m_a).squaredNorm();
            const double db = (s - m_b).squaredNorm();
            const bool decide_b = db < da; // tie decides for m_a
            errors += decide_b != truth_is_b ? 1 : 0;
        }
        block_errors[b] = errors;
    });

    std::int64_t total = 0;
    for (const std::int64_t e : block_errors) total += e;
    return static_cast<double>(total) / static_cast<double>(n_trials);
}

MonteCarloMse monte_carlo_mse_stats(const Schedule& schedule, const TissueSpec& spec,
                                    const NoiseModel& noise, const EpgConfig& cfg,
                                    const QuadratureConfig& quad, std::int64_t n_trials,
                                    std::uint64_t seed) {
    validate(noise);
    validate(quad);
    if (n_trials < 1000) throw PreconditionError("monte_carlo_mse needs at least 1e3 trials");

    const Eigen::MatrixXd grid = fingerprint_grid(schedule, spec, cfg, quad.n_grid);
    const Eigen::Index g = grid.cols();
    const double h = spec.delta() / static_cast<double>(g - 1);
    const double sigma = std::sqrt(noise.sigma2);
    const Eigen::Index n = grid.rows();

    const std::int64_t n_blocks = (n_trials + kTrialBlock - 1) / kTrialBlock;
    std::vector<double> block_e2(static_cast<std::size_t>(n_blocks), 0.0);
    std::vector<double> block_e4(static_cast<std::size_t>(n_blocks), 0.0);

    parallel_for(static_cast<std::size_t>(n_blocks), [&](std::size_t b) {
        const std::int64_t begin = static_cast<std::int64_t>(b) * kTrialBlock;
        const std::int64_t end = std::min(n_trials, begin + kTrialBlock);
        Eigen::VectorXd s(n);
        double sum_e2 = 0.0;
        double sum_e4 = 0.0;
        for (std::int64_t t = begin; t < end; ++t) {
            SplitMix64 rng(substream(seed, static_cast<std::uint64_t>(t)));
            const double theta = spec.range_min + spec.delta() * rng.uniform01();
            s = simulate_fingerprint(schedule, spec.tissue_at(theta), cfg);
            for (Eigen::Index i = 0; i < n; ++i) s[i] += sigma * rng.normal();
            Eigen::Index best = 0;
            double best_d = (s - grid.col(0)).squaredNorm();
            for (Eigen::Index i = 1; i < g; ++i) {
                const double d = (s - grid.col(i)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = i;
                }
            }
            const double err = spec.range_min + h * static_cast<double>(best) - theta;
            const double e2 = err * err;
            sum_e2 += e2;
            sum_e4 += e2 * e2;
        }
        block_e2[b] = sum_e2;
        block_e4[b] = sum_e4;
    });

    double sum_e2 = 0.0;
    double sum_e4 = 0.0;
    for (std::size_t b = 0; b < block_e2.size(); ++b) {
        sum_e2 += block_e2[b];
        sum_e4 += block_e4[b];
    }
    const double mean = sum_e2 / static_cast<double>(n_trials);
    const double var = std::max(0.0, sum_e4 / static_cast<double>(n_trials) - mean * mean);
    return {mean, std::sqrt(var / static_cast<double>(n_trials))};
}

double monte_carlo_mse(const Schedule& schedule, const TissueSpec& spec, const NoiseModel& noise,
                       const EpgConfig& cfg, const QuadratureConfig& quad, std::int64_t n_trials,
                       std::uint64_t seed) {
    return monte_carlo_mse_stats(schedule, spec, noise, cfg, quad, n_trials, seed).mse;
}

} // namespace mrf
