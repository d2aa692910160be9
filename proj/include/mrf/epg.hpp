#pragma once

#include "mrf/types.hpp"

namespace mrf {

/// Fingerprint of an inversion-prepared, gradient-spoiled (FISP-type)
/// acquisition, computed by extended-phase-graph recursion.
///
/// Frame loop: RF tip about a fixed axis, relax to the echo time, record the
/// zeroth-order transverse configuration (a signed real value under the
/// fixed-phase convention), relax over the rest of the TR, then apply one
/// spoiler shift of the configuration ladder. The run starts from an ideal
/// inversion scaled by cfg.inversion_efficiency.
Fingerprint simulate_fingerprint(const Schedule& schedule, const Tissue& tissue,
                                 const EpgConfig& cfg = {});

/// Central finite difference of the fingerprint with respect to T1 or T2,
/// step = rel_step * parameter. rel_step must lie in (0, 0.1].
Eigen::VectorXd signal_derivative(const Schedule& schedule, const Tissue& tissue,
                                  const EpgConfig& cfg, Param target, double rel_step);

} // namespace mrf
