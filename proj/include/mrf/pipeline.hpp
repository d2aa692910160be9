#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mrf/bounds.hpp"
#include "mrf/types.hpp"

namespace mrf {

using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Matched-filter dictionary: one unit-norm fingerprint per (T1, T2) pair,
/// stored column-wise for inner-product matching. Original norms are kept so
/// magnitudes can be recovered.
struct Dictionary {
    std::string schedule_id;
    std::vector<Tissue> tissues;
    Eigen::MatrixXd atoms; ///< n_frames x n_atoms, unit columns
    Eigen::VectorXd norms;

    Eigen::Index n_atoms() const { return atoms.cols(); }
};

/// Label image plus its tissue table. Label 0 is background; label L > 0
/// refers to tissues[L - 1]. labels is height x width (row = y).
struct Phantom {
    int width = 0;
    int height = 0;
    Eigen::ArrayXXi labels;
    std::vector<Tissue> tissues;
    int background_label = 0;
};

struct ParameterMaps {
    Eigen::ArrayXXd t1_ms;
    Eigen::ArrayXXd t2_ms;
    MaskArray mask;
};

struct MatchResult {
    Tissue tissue;
    double score = 0.0;
    Eigen::Index atom_index = 0;
};

void validate(const Phantom& phantom);

/// One atom per (t1, t2) in the Cartesian product of the value lists.
/// Values must be positive and free of duplicates.
Dictionary build_dictionary(const Schedule& schedule, const std::vector<double>& t1_values,
                            const std::vector<double>& t2_values, const EpgConfig& cfg = {});

/// Atom maximizing |<observed, atom>|; ties break to the lowest atom index.
MatchResult match(const Dictionary& dictionary, const Fingerprint& observed);

/// Noisy single-voxel acquisition of every foreground pixel:
/// s = m(tissue) + z with white noise drawn per (seed, pixel) substream.
/// Returns an n_frames x (width*height) matrix, pixel index = y*width + x;
/// background columns are zero.
Eigen::MatrixXd simulate_acquisition(const Phantom& phantom, const Schedule& schedule,
                                     const NoiseModel& noise, const EpgConfig& cfg,
                                     std::uint64_t seed);

/// Per-pixel dictionary match of the masked observations.
ParameterMaps reconstruct(const Dictionary& dictionary, const Eigen::MatrixXd& observations,
                          const MaskArray& mask);

/// (t1_nmse, t2_nmse): per-map ||estimate - truth||^2 / ||truth||^2 over the
/// shared mask.
std::pair<double, double> nmse(const ParameterMaps& estimate, const ParameterMaps& truth);

/// Ground-truth maps implied by a phantom's labels.
ParameterMaps truth_maps(const Phantom& phantom);

/// Deterministic concentric-geometry phantom with four tissues
/// (white-matter-, grey-matter-, CSF- and lesion-like).
Phantom synthetic_phantom(int width = 64, int height = 64);

struct SchemeComparison {
    std::string scheme;
    double t1_nmse = 0.0;
    double t2_nmse = 0.0;
    double sigma2 = 0.0;
    int n_frames = 0;
    std::uint64_t seed = 0;
    ParameterMaps maps; ///< kept so callers can emit map and error-map grids
};

/// Builds a dictionary per schedule, acquires the phantom with the same
/// seed-derived noise stream scaled identically, reconstructs, and reports
/// NMSEs. All schedules must share n_frames.
std::vector<SchemeComparison> compare_schemes(
    const std::vector<std::pair<std::string, Schedule>>& schedules, const Phantom& phantom,
    const std::vector<double>& t1_values, const std::vector<double>& t2_values,
    const NoiseModel& noise, const EpgConfig& cfg, std::uint64_t seed);

} // namespace mrf
