#include "mrf/epg.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mrf {
namespace {

// RF tip by alpha about the y axis in the per-order (F+, F-, Z) basis. With
// this fixed-phase convention every state stays real and the readout is the
// signed F+(0) value.
Eigen::Matrix3d rf_rotation(double alpha_rad) {
    const double ch = std::cos(0.5 * alpha_rad);
    const double sh = std::sin(0.5 * alpha_rad);
    const double sa = std::sin(alpha_rad);
    Eigen::Matrix3d r;
    r << ch * ch, -sh * sh, sa,
        -sh * sh, ch * ch, sa,
        -0.5 * sa, -0.5 * sa, std::cos(alpha_rad);
    return r;
}

void relax(Eigen::Matrix3Xd& state, double dt_ms, const Tissue& tissue) {
    const double e1 = std::exp(-dt_ms / tissue.t1_ms);
    const double e2 = std::exp(-dt_ms / tissue.t2_ms);
    state.topRows<2>() *= e2;
    state.row(2) *= e1;
    state(2, 0) += 1.0 - e1; // longitudinal recovery toward M0 = 1
}

// Unbalanced-gradient spoiler: F+ orders shift up, F- orders shift down; the
// new F+(0) enters from the F- ladder. The highest order falls off the end.
void spoiler_shift(Eigen::Matrix3Xd& state) {
    const Eigen::Index k = state.cols();
    for (Eigen::Index i = k - 1; i >= 1; --i) state(0, i) = state(0, i - 1);
    state(0, 0) = state(1, 1);
    for (Eigen::Index i = 0; i + 1 < k; ++i) state(1, i) = state(1, i + 1);
    state(1, k - 1) = 0.0;
}

} // namespace

Fingerprint simulate_fingerprint(const Schedule& schedule, const Tissue& tissue,
                                 const EpgConfig& cfg) {
    validate(schedule);
    validate(tissue);
    validate(cfg);

    const Eigen::Index n = schedule.n_frames();
    const int n_states = cfg.resolved_states(n);
    constexpr double deg = std::numbers::pi / 180.0;

    Eigen::Matrix3Xd state = Eigen::Matrix3Xd::Zero(3, n_states);
    state(2, 0) = -cfg.inversion_efficiency;

    Fingerprint out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        state = rf_rotation(schedule.fa_deg[i] * deg) * state;
        relax(state, schedule.te_ms, tissue);
        out[i] = state(0, 0);
        if (!std::isfinite(out[i]))
            throw NumericError("non-finite signal at frame " + std::to_string(i + 1));
        relax(state, schedule.tr_ms[i] - schedule.te_ms, tissue);
        spoiler_shift(state);
    }
    return out;
}

Eigen::VectorXd signal_derivative(const Schedule& schedule, const Tissue& tissue,
                                  const EpgConfig& cfg, Param target, double rel_step) {
    if (!(rel_step > 0.0 && rel_step <= 0.1))
        throw PreconditionError("rel_step must lie in (0, 0.1]");
    validate(tissue);

    const double theta = target == Param::T1 ? tissue.t1_ms : tissue.t2_ms;
    const double hi = theta * (1.0 + rel_step);
    const double lo = theta * (1.0 - rel_step);
    if (!(hi > lo))
        throw NumericError("finite-difference step underflows at " +
                           std::string(to_string(target)) + " = " + std::to_string(theta));

    Tissue up = tissue;
    Tissue dn = tissue;
    (target == Param::T1 ? up.t1_ms : up.t2_ms) = hi;
    (target == Param::T1 ? dn.t1_ms : dn.t2_ms) = lo;
    return (simulate_fingerprint(schedule, up, cfg) - simulate_fingerprint(schedule, dn, cfg)) /
           (hi - lo);
}

} // namespace mrf
