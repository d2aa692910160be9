#pragma once

#include <cstdint>

#include "mrf/types.hpp"

namespace mrf {

/// One scalar estimation problem: the varying relaxation parameter, its
/// uniform prior range, the fixed complementary parameter, and the weight it
/// carries in a design objective.
struct TissueSpec {
    Param varying = Param::T1;
    double range_min = 0.0;
    double range_max = 0.0;
    double fixed_other = 0.0;
    double weight = 1.0;

    double delta() const { return range_max - range_min; }
    Tissue tissue_at(double theta) const;
    Tissue center_tissue() const { return tissue_at(0.5 * (range_min + range_max)); }
};

/// White noise, one variance per sample (signal units squared).
struct NoiseModel {
    double sigma2 = 1.0;
};

struct QuadratureConfig {
    int n_grid = 64; ///< uniform theta-grid points spanning the prior range
};

void validate(const TissueSpec& spec);
void validate(const NoiseModel& noise);
void validate(const QuadratureConfig& quad);

/// Tail distribution function of the standard normal, via erfc.
double q_function(double x);

/// Mean of the log-likelihood-ratio statistic for the binary test between
/// two fingerprints under white noise: ||m_a - m_b||^2 / (2 sigma^2). The
/// LLR variance is twice this value; callers derive it.
double llr_mean(const Fingerprint& m_a, const Fingerprint& m_b, const NoiseModel& noise);

/// Equal-prior MAP minimum error probability Q(||m_a - m_b|| / (2 sigma)).
double pmin(const Fingerprint& m_a, const Fingerprint& m_b, const NoiseModel& noise);

/// Fingerprints at n_grid uniform nodes of the spec's prior range, one
/// column per node. Columns are independent and computed in parallel.
Eigen::MatrixXd fingerprint_grid(const Schedule& schedule, const TissueSpec& spec,
                                 const EpgConfig& cfg, int n_grid);

/// Trapezoidal evaluation of the minimum-error-probability bound
///   (1/delta) * int_0^delta xi * int Q(||m(phi) - m(phi+xi)|| / (2 sigma)) dphi dxi
/// on a precomputed fingerprint grid. The lag xi runs over integer multiples
/// of the grid spacing, so the inner integral at lag k pairs nodes (i, i+k).
double zzb_from_grid(const Eigen::MatrixXd& grid, double delta, double sigma2);

/// Bound value in ms^2 for one tissue spec.
double zzb(const Schedule& schedule, const TissueSpec& spec, const NoiseModel& noise,
           const EpgConfig& cfg, const QuadratureConfig& quad);

/// sigma^2 / ||d||^2. Throws NonIdentifiableError when the derivative is zero.
double crb_from_derivative(const Eigen::VectorXd& derivative, const NoiseModel& noise);

/// Single-parameter white-Gaussian Cramer-Rao bound in ms^2, derivative by
/// central finite differences.
double crb(const Schedule& schedule, const Tissue& tissue, const NoiseModel& noise,
           const EpgConfig& cfg, Param target);

/// Empirical minimum error probability of the equal-prior MAP (nearest
/// signal) detector. Deterministic given the seed; trials use counter-based
/// substreams so the result does not depend on execution order.
double monte_carlo_pmin(const Fingerprint& m_a, const Fingerprint& m_b,
                        const NoiseModel& noise, std::int64_t n_trials, std::uint64_t seed);

struct MonteCarloMse {
    double mse = 0.0;       ///< mean of (theta_hat - theta)^2, ms^2
    double std_error = 0.0; ///< Monte-Carlo standard error of the mean
};

/// Empirical MSE of the exhaustive grid-MAP estimator: theta drawn uniformly
/// from the prior, observation s = m(theta) + z, estimate = the grid node
/// minimizing ||s - m(theta_i)||.
MonteCarloMse monte_carlo_mse_stats(const Schedule& schedule, const TissueSpec& spec,
                                    const NoiseModel& noise, const EpgConfig& cfg,
                                    const QuadratureConfig& quad, std::int64_t n_trials,
                                    std::uint64_t seed);

double monte_carlo_mse(const Schedule& schedule, const TissueSpec& spec,
                       const NoiseModel& noise, const EpgConfig& cfg,
                       const QuadratureConfig& quad, std::int64_t n_trials,
                       std::uint64_t seed);

} // namespace mrf
