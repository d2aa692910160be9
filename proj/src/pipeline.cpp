#include "mrf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "mrf/epg.hpp"
#include "mrf/parallel.hpp"
#include "mrf/rng.hpp"

namespace mrf {
namespace {

void require_unique_positive(const std::vector<double>& values, const char* name) {
    if (values.empty()) throw PreconditionError(std::string(name) + " value list is empty");
    std::set<double> seen;
    for (const double v : values) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw PreconditionError(std::string(name) + " values must be positive and finite");
        if (!seen.insert(v).second)
            throw PreconditionError(std::string(name) + " values contain a duplicate: " +
                                    std::to_string(v));
    }
}

} // namespace

void validate(const Phantom& phantom) {
    if (phantom.width < 1 || phantom.height < 1)
        throw PreconditionError("phantom dimensions must be positive");
    if (phantom.labels.rows() != phantom.height || phantom.labels.cols() != phantom.width)
        throw PreconditionError("phantom label grid does not match width/height");
    for (Eigen::Index y = 0; y < phantom.labels.rows(); ++y)
        for (Eigen::Index x = 0; x < phantom.labels.cols(); ++x) {
            const int label = phantom.labels(y, x);
            if (label == phantom.background_label) continue;
            if (label < 1 || static_cast<std::size_t>(label) > phantom.tissues.size())
                throw PreconditionError("phantom label " + std::to_string(label) +
                                        " does not index the tissue table");
        }
    for (const Tissue& tissue : phantom.tissues) validate(tissue);
}

Dictionary build_dictionary(const Schedule& schedule, const std::vector<double>& t1_values,
                            const std::vector<double>& t2_values, const EpgConfig& cfg) {
    validate(schedule);
    require_unique_positive(t1_values, "t1");
    require_unique_positive(t2_values, "t2");

    Dictionary dict;
    dict.tissues.reserve(t1_values.size() * t2_values.size());
    for (const double t1 : t1_values)
        for (const double t2 : t2_values) dict.tissues.push_back({t1, t2});

    const Eigen::Index n_atoms = static_cast<Eigen::Index>(dict.tissues.size());
    dict.atoms.resize(schedule.n_frames(), n_atoms);
    dict.norms.resize(n_atoms);

    parallel_for(static_cast<std::size_t>(n_atoms), [&](std::size_t a) {
        const Eigen::Index i = static_cast<Eigen::Index>(a);
        const Fingerprint m = simulate_fingerprint(schedule, dict.tissues[a], cfg);
        const double norm = m.norm();
        if (!(norm > 0.0))
            throw NumericError("dictionary atom for (t1=" + std::to_string(dict.tissues[a].t1_ms) +
                               ", t2=" + std::to_string(dict.tissues[a].t2_ms) +
                               ") has zero norm");
        dict.atoms.col(i) = m / norm;
        dict.norms[i] = norm;
    });
    return dict;
}

MatchResult match(const Dictionary& dictionary, const Fingerprint& observed) {
    if (dictionary.n_atoms() == 0) throw PreconditionError("dictionary is empty");
    if (observed.size() != dictionary.atoms.rows())
        throw PreconditionError("observed fingerprint length " + std::to_string(observed.size()) +
                                " does not match dictionary atom length " +
                                std::to_string(dictionary.atoms.rows()));

    // Strict > keeps the lowest atom index on ties.
    const Eigen::VectorXd scores = (dictionary.atoms.transpose() * observed).cwiseAbs();
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return {dictionary.tissues[static_cast<std::size_t>(best)], scores[best], best};
}

Eigen::MatrixXd simulate_acquisition(const Phantom& phantom, const Schedule& schedule,
                                     const NoiseModel& noise, const EpgConfig& cfg,
                                     std::uint64_t seed) {
    validate(phantom);
    validate(schedule);
    if (!(noise.sigma2 >= 0.0) || !std::isfinite(noise.sigma2))
        throw PreconditionError("noise variance must be nonnegative and finite");

    // One fingerprint per label; pixels only add their own noise stream.
    std::vector<Fingerprint> by_label(phantom.tissues.size());
    for (std::size_t l = 0; l < phantom.tissues.size(); ++l)
        by_label[l] = simulate_fingerprint(schedule, phantom.tissues[l], cfg);

    const Eigen::Index n = schedule.n_frames();
    const std::size_t n_pixels = static_cast<std::size_t>(phantom.width) * phantom.height;
    const double sigma = std::sqrt(noise.sigma2);
    Eigen::MatrixXd observations = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(n_pixels));

    parallel_for(n_pixels, [&](std::size_t p) {
        const int y = static_cast<int>(p) / phantom.width;
        const int x = static_cast<int>(p) % phantom.width;
        const int label = phantom.labels(y, x);
        if (label == phantom.background_label) return;
        SplitMix64 rng(substream(seed, p));
        auto col = observations.col(static_cast<Eigen::Index>(p));
        const Fingerprint& m = by_label[static_cast<std::size_t>(label - 1)];
        for (Eigen::Index i = 0; i < n; ++i) col[i] = m[i] + sigma * rng.normal();
    });
    return observations;
}

ParameterMaps reconstruct(const Dictionary& dictionary, const Eigen::MatrixXd& observations,
                          const MaskArray& mask) {
    if (observations.rows() != dictionary.atoms.rows())
        throw PreconditionError("observation length does not match dictionary atom length");
    const Eigen::Index height = mask.rows();
    const Eigen::Index width = mask.cols();
    if (observations.cols() != width * height)
        throw PreconditionError("observation count does not match the mask size");

    ParameterMaps maps;
    maps.t1_ms = Eigen::ArrayXXd::Zero(height, width);
    maps.t2_ms = Eigen::ArrayXXd::Zero(height, width);
    maps.mask = mask;

    parallel_for(static_cast<std::size_t>(width * height), [&](std::size_t p) {
        const Eigen::Index y = static_cast<Eigen::Index>(p) / width;
        const Eigen::Index x = static_cast<Eigen::Index>(p) % width;
        if (!mask(y, x)) return;
        const MatchResult m = match(dictionary, observations.col(static_cast<Eigen::Index>(p)));
        maps.t1_ms(y, x) = m.tissue.t1_ms;
        maps.t2_ms(y, x) = m.tissue.t2_ms;
    });
    return maps;
}

std::pair<double, double> nmse(const ParameterMaps& estimate, const ParameterMaps& truth) {
    if (estimate.mask.rows() != truth.mask.rows() || estimate.mask.cols() != truth.mask.cols() ||
        !(estimate.mask == truth.mask).all())
        throw PreconditionError("estimate and truth masks differ");
    if (!truth.mask.any()) throw PreconditionError("mask is empty");

    double t1_err = 0.0, t1_ref = 0.0, t2_err = 0.0, t2_ref = 0.0;
    for (Eigen::Index y = 0; y < truth.mask.rows(); ++y)
        for (Eigen::Index x = 0; x < truth.mask.cols(); ++x) {
            if (!truth.mask(y, x)) continue;
            const double d1 = estimate.t1_ms(y, x) - truth.t1_ms(y, x);
            const double d2 = estimate.t2_ms(y, x) - truth.t2_ms(y, x);
            t1_err += d1 * d1;
            t2_err += d2 * d2;
            t1_ref += truth.t1_ms(y, x) * truth.t1_ms(y, x);
            t2_ref += truth.t2_ms(y, x) * truth.t2_ms(y, x);
        }
    if (!(t1_ref > 0.0) || !(t2_ref > 0.0))
        throw PreconditionError("truth maps have zero norm over the mask");
    return {t1_err / t1_ref, t2_err / t2_ref};
}

ParameterMaps truth_maps(const Phantom& phantom) {
    validate(phantom);
    ParameterMaps maps;
    maps.t1_ms = Eigen::ArrayXXd::Zero(phantom.height, phantom.width);
    maps.t2_ms = Eigen::ArrayXXd::Zero(phantom.height, phantom.width);
    maps.mask = MaskArray::Constant(phantom.height, phantom.width, false);
    for (Eigen::Index y = 0; y < phantom.labels.rows(); ++y)
        for (Eigen::Index x = 0; x < phantom.labels.cols(); ++x) {
            const int label = phantom.labels(y, x);
            if (label == phantom.background_label) continue;
            const Tissue& tissue = phantom.tissues[static_cast<std::size_t>(label - 1)];
            maps.t1_ms(y, x) = tissue.t1_ms;
            maps.t2_ms(y, x) = tissue.t2_ms;
            maps.mask(y, x) = true;
        }
    return maps;
}

Phantom synthetic_phantom(int width, int height) {
    if (width < 16 || height < 16)
        throw PreconditionError("synthetic phantom needs at least 16x16 pixels");
    Phantom phantom;
    phantom.width = width;
    phantom.height = height;
    phantom.tissues = {
        {900.0, 60.0},   // 1: white-matter-like
        {1500.0, 90.0},  // 2: grey-matter-like
        {3500.0, 400.0}, // 3: CSF-like
        {1800.0, 800.0}, // 4: lesion-like
    };
    phantom.labels = Eigen::ArrayXXi::Zero(height, width);

    const double cx = 0.5 * (width - 1);
    const double cy = 0.5 * (height - 1);
    const double sx = width / 64.0; // geometry scales with the grid
    const double sy = height / 64.0;
    const auto inside_ellipse = [](double x, double y, double ex, double ey, double rx,
                                   double ry) {
        const double dx = (x - ex) / rx;
        const double dy = (y - ey) / ry;
        return dx * dx + dy * dy <= 1.0;
    };

    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            int label = 0;
            if (inside_ellipse(x, y, cx, cy, 27.0 * sx, 30.0 * sy)) label = 2;
            if (inside_ellipse(x, y, cx, cy, 19.0 * sx, 22.0 * sy)) label = 1;
            if (inside_ellipse(x, y, cx - 7.0 * sx, cy - 6.0 * sy, 4.5 * sx, 4.5 * sy) ||
                inside_ellipse(x, y, cx + 7.0 * sx, cy - 6.0 * sy, 4.5 * sx, 4.5 * sy))
                label = 3;
            if (inside_ellipse(x, y, cx + 6.0 * sx, cy + 10.0 * sy, 3.5 * sx, 3.5 * sy))
                label = 4;
            phantom.labels(y, x) = label;
        }
    return phantom;
}

std::vector<SchemeComparison> compare_schemes(
    const std::vector<std::pair<std::string, Schedule>>& schedules, const Phantom& phantom,
    const std::vector<double>& t1_values, const std::vector<double>& t2_values,
    const NoiseModel& noise, const EpgConfig& cfg, std::uint64_t seed) {
    if (schedules.empty()) throw PreconditionError("no schedules to compare");
    const Eigen::Index n = schedules.front().second.n_frames();
    for (const auto& [name, schedule] : schedules)
        if (schedule.n_frames() != n)
            throw PreconditionError("schedule '" + name + "' does not share n_frames");

    const ParameterMaps truth = truth_maps(phantom);
    std::vector<SchemeComparison> rows;
    rows.reserve(schedules.size());
    for (const auto& [name, schedule] : schedules) {
        const Dictionary dict = build_dictionary(schedule, t1_values, t2_values, cfg);
        const Eigen::MatrixXd obs = simulate_acquisition(phantom, schedule, noise, cfg, seed);
        SchemeComparison row;
        row.scheme = name;
        row.maps = reconstruct(dict, obs, truth.mask);
        std::tie(row.t1_nmse, row.t2_nmse) = nmse(row.maps, truth);
        row.sigma2 = noise.sigma2;
        row.n_frames = static_cast<int>(n);
        row.seed = seed;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace mrf
