#pragma once

#include <string>

#include <Eigen/Dense>

#include "mrf/errors.hpp"

namespace mrf {

/// Transverse signal samples, one per acquisition frame. Proton density is
/// normalized to 1, so |sample| <= 1 for every feasible schedule and tissue.
using Fingerprint = Eigen::VectorXd;

enum class Param { T1, T2 };

const char* to_string(Param p);
Param param_from_string(const std::string& name);

/// A (T1, T2) relaxation pair in milliseconds. T2 may exceed T1.
struct Tissue {
    double t1_ms = 0.0;
    double t2_ms = 0.0;
};

/// Per-frame flip angles and repetition times plus the shared echo time.
struct Schedule {
    Eigen::VectorXd fa_deg;
    Eigen::VectorXd tr_ms;
    double te_ms = 3.0;

    Eigen::Index n_frames() const { return fa_deg.size(); }
};

/// EPG engine knobs. n_states == 0 keeps every configuration order that can
/// be populated (n_frames + 1), which is exact under ideal spoiling; values
/// >= 2 truncate the ladder for speed.
struct EpgConfig {
    int n_states = 0;
    double inversion_efficiency = 1.0;

    int resolved_states(Eigen::Index n_frames) const;
};

void validate(const Tissue& tissue);
void validate(const Schedule& schedule);
void validate(const EpgConfig& cfg);

} // namespace mrf
