#include "mrf/types.hpp"

#include <cmath>
#include <string>

namespace mrf {

const char* to_string(Param p) {
    return p == Param::T1 ? "T1" : "T2";
}

Param param_from_string(const std::string& name) {
    if (name == "T1" || name == "t1") return Param::T1;
    if (name == "T2" || name == "t2") return Param::T2;
    throw ParseError("unknown parameter name '" + name + "' (expected T1 or T2)");
}

int EpgConfig::resolved_states(Eigen::Index n_frames) const {
    if (n_states == 0) return static_cast<int>(n_frames) + 1;
    return n_states;
}

void validate(const Tissue& tissue) {
    if (!(tissue.t1_ms > 0.0) || !std::isfinite(tissue.t1_ms))
        throw PreconditionError("tissue t1 must be positive and finite, got " +
                                std::to_string(tissue.t1_ms));
    if (!(tissue.t2_ms > 0.0) || !std::isfinite(tissue.t2_ms))
        throw PreconditionError("tissue t2 must be positive and finite, got " +
                                std::to_string(tissue.t2_ms));
}

void validate(const Schedule& schedule) {
    const Eigen::Index n = schedule.n_frames();
    if (n < 1) throw PreconditionError("schedule must have at least one frame");
    if (schedule.tr_ms.size() != n)
        throw PreconditionError("flip-angle and repetition-time vectors differ in length (" +
                                std::to_string(n) + " vs " + std::to_string(schedule.tr_ms.size()) +
                                ")");
    if (!(schedule.te_ms > 0.0) || !std::isfinite(schedule.te_ms))
        throw PreconditionError("echo time must be positive and finite");
    for (Eigen::Index i = 0; i < n; ++i) {
        const double fa = schedule.fa_deg[i];
        if (!std::isfinite(fa) || !(fa > 0.0) || fa > 180.0)
            throw PreconditionError("flip angle at frame " + std::to_string(i + 1) +
                                    " must lie in (0, 180] degrees, got " + std::to_string(fa));
        const double tr = schedule.tr_ms[i];
        if (!std::isfinite(tr) || !(tr > schedule.te_ms))
            throw PreconditionError("repetition time at frame " + std::to_string(i + 1) +
                                    " must exceed the echo time, got " + std::to_string(tr));
    }
}

void validate(const EpgConfig& cfg) {
    if (cfg.n_states != 0 && cfg.n_states < 2)
        throw PreconditionError("n_states must be 0 (exact) or at least 2");
    if (!(cfg.inversion_efficiency >= 0.0 && cfg.inversion_efficiency <= 1.0))
        throw PreconditionError("inversion efficiency must lie in [0, 1]");
}

} // namespace mrf
