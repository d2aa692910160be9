#pragma once

#include <cstdint>

#include "mrf/types.hpp"

namespace mrf {

/// Brute-force Bloch reference for simulate_fingerprint: n_spins isochromats
/// whose spoiler phases form a deterministic uniform grid over [0, 2*pi)
/// (one full cycle of intravoxel dephasing per TR). Each spin is rotated,
/// relaxed and dephased frame by frame; the voxel signal is the complex mean
/// projected onto the real-valued EPG phase convention.
///
/// The seed is part of the interface for callers that want randomized
/// phases; under the uniform grid it has no effect.
Fingerprint simulate_isochromat_reference(const Schedule& schedule, const Tissue& tissue,
                                          int n_spins, std::uint64_t seed,
                                          double inversion_efficiency = 1.0);

} // namespace mrf
