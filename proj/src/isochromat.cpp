#include "mrf/isochromat.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mrf/parallel.hpp"

namespace mrf {

Fingerprint simulate_isochromat_reference(const Schedule& schedule, const Tissue& tissue,
                                          int n_spins, std::uint64_t /*seed*/,
                                          double inversion_efficiency) {
    validate(schedule);
    validate(tissue);
    if (n_spins < 1) throw PreconditionError("n_spins must be positive");
    if (!(inversion_efficiency >= 0.0 && inversion_efficiency <= 1.0))
        throw PreconditionError("inversion efficiency must lie in [0, 1]");

    const Eigen::Index n = schedule.n_frames();
    constexpr double deg = std::numbers::pi / 180.0;
    const double two_pi = 2.0 * std::numbers::pi;

    // One row per frame, one column per spin; reduced column-wise afterward
    // in a fixed order so the result is identical for any thread count.
    Eigen::MatrixXd mx_at_echo(n, n_spins);

    parallel_for(static_cast<std::size_t>(n_spins), [&](std::size_t j) {
        const double psi = two_pi * static_cast<double>(j) / n_spins;
        const double cpsi = std::cos(psi);
        const double spsi = std::sin(psi);
        double x = 0.0, y = 0.0, z = -inversion_efficiency;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double alpha = schedule.fa_deg[i] * deg;
            const double ca = std::cos(alpha);
            const double sa = std::sin(alpha);
            // tip about y (matches the EPG fixed-phase convention)
            const double x1 = ca * x + sa * z;
            z = -sa * x + ca * z;
            x = x1;
            // relax to the echo
            double e1 = std::exp(-schedule.te_ms / tissue.t1_ms);
            double e2 = std::exp(-schedule.te_ms / tissue.t2_ms);
            x *= e2;
            y *= e2;
            z = e1 * z + (1.0 - e1);
            mx_at_echo(i, j) = x;
            // relax over the rest of the TR
            const double rest = schedule.tr_ms[i] - schedule.te_ms;
            e1 = std::exp(-rest / tissue.t1_ms);
            e2 = std::exp(-rest / tissue.t2_ms);
            x *= e2;
            y *= e2;
            z = e1 * z + (1.0 - e1);
            // spoiler dephasing for this spin's intravoxel position
            const double x2 = cpsi * x - spsi * y;
            y = spsi * x + cpsi * y;
            x = x2;
        }
    });

    // The My components cancel pairwise on the symmetric grid; the voxel
    // signal projected onto the EPG convention is the mean Mx.
    Fingerprint out = mx_at_echo.rowwise().sum() / static_cast<double>(n_spins);
    for (Eigen::Index i = 0; i < n; ++i)
        if (!std::isfinite(out[i]))
            throw NumericError("non-finite signal at frame " + std::to_string(i + 1));
    return out;
}

} // namespace mrf
