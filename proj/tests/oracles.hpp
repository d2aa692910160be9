// Test-side oracles, independent of the library's evaluation paths.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mrf/bounds.hpp"
#include "mrf/epg.hpp"
#include "mrf/rng.hpp"
#include "mrf/types.hpp"

namespace oracles {

inline double nrmse(const Eigen::VectorXd& x, const Eigen::VectorXd& ref) {
    return (x - ref).norm() / ref.norm();
}

/// Composite Simpson over uniformly spaced samples; a trailing odd interval
/// falls back to one trapezoid panel.
inline double integrate_samples(const Eigen::VectorXd& f, double h) {
    const Eigen::Index n = f.size();
    if (n < 2) return 0.0;
    double total = 0.0;
    Eigen::Index i = 0;
    while (i + 2 < n) {
        total += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
        i += 2;
    }
    if (i + 1 < n) total += 0.5 * h * (f[i] + f[i + 1]);
    return total;
}

/// High-resolution reference for the bound integral: Simpson in both the
/// inner offset variable and the outer lag variable on an n_grid-node
/// fingerprint grid.
inline double zzb_reference(const mrf::Schedule& schedule, const mrf::TissueSpec& spec,
                            double sigma2, const mrf::EpgConfig& cfg, int n_grid) {
    const Eigen::MatrixXd grid = mrf::fingerprint_grid(schedule, spec, cfg, n_grid);
    const double h = spec.delta() / (n_grid - 1);
    const double two_sigma = 2.0 * std::sqrt(sigma2);

    Eigen::VectorXd outer = Eigen::VectorXd::Zero(n_grid);
    for (int k = 1; k < n_grid; ++k) {
        const int nodes = n_grid - k;
        if (nodes < 2) continue;
        Eigen::VectorXd inner(nodes);
        for (int i = 0; i < nodes; ++i)
            inner[i] = mrf::q_function((grid.col(i) - grid.col(i + k)).norm() / two_sigma);
        outer[k] = (k * h) * integrate_samples(inner, h);
    }
    return integrate_samples(outer, h) / spec.delta();
}

/// 5-point central stencil for one coordinate of a scalar function.
inline double five_point_derivative(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x, Eigen::Index i, double h) {
    Eigen::VectorXd p = x;
    p[i] = x[i] + 2.0 * h;
    const double f2p = f(p);
    p[i] = x[i] + h;
    const double f1p = f(p);
    p[i] = x[i] - h;
    const double f1m = f(p);
    p[i] = x[i] - 2.0 * h;
    const double f2m = f(p);
    return (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * h);
}

/// Feasible random schedule under the standard constraints: first frame 180,
/// later flip angles a slew-limited walk inside [10, 60], TR uniform in
/// [12, 15].
inline mrf::Schedule random_feasible_schedule(int n_frames, std::uint64_t seed) {
    mrf::SplitMix64 rng(seed);
    Eigen::VectorXd fa(n_frames), tr(n_frames);
    fa[0] = 180.0;
    double current = 10.0 + 50.0 * rng.uniform01();
    for (int i = 1; i < n_frames; ++i) {
        current = std::clamp(current + (2.0 * rng.uniform01() - 1.0), 10.0, 60.0);
        fa[i] = current;
    }
    for (int i = 0; i < n_frames; ++i) tr[i] = 12.0 + 3.0 * rng.uniform01();
    return mrf::Schedule{std::move(fa), std::move(tr), 3.0};
}

} // namespace oracles
