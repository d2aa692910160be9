#include <cmath>

#include <doctest.h>

#include "mrf/bounds.hpp"
#include "mrf/epg.hpp"
#include "mrf/rng.hpp"
#include "mrf/seqopt.hpp"
#include "oracles.hpp"
#include "table1_data.hpp"

using namespace mrf;

namespace {

Fingerprint random_fingerprint(Eigen::Index n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Fingerprint f(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = rng.normal();
    return f;
}

const TissueSpec kRow1 = testdata::table1_specs()[0]; // T1 in [100, 500], T2 = 20
const TissueSpec kRow8 = testdata::table1_specs()[7]; // T2 in [50, 80], T1 = 900

} // namespace

TEST_CASE("q_function identities") {
    CHECK(q_function(0.0) == 0.5);
    CHECK(q_function(0.7) + q_function(-0.7) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(q_function(1.2815515655) - 0.1) < 1e-9);
    CHECK_THROWS_AS((void)q_function(std::nan("")), PreconditionError);
}

TEST_CASE("llr_mean") {
    const NoiseModel noise{2.0};
    const Fingerprint a = random_fingerprint(32, 1);
    CHECK(llr_mean(a, a, noise) == 0.0);

    Fingerprint zero = Fingerprint::Zero(2);
    Fingerprint two = Fingerprint::Constant(2, 2.0); // ||diff||^2 = 8
    CHECK(llr_mean(zero, two, noise) == 2.0);

    const Fingerprint x = random_fingerprint(400, 2);
    const Fingerprint y = random_fingerprint(400, 3);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) sum += (x[i] - y[i]) * (x[i] - y[i]);
    const double expected = sum / (2.0 * noise.sigma2);
    CHECK(llr_mean(x, y, noise) == doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS((void)llr_mean(zero, random_fingerprint(3, 4), noise), PreconditionError);
}

TEST_CASE("pmin closed form") {
    const Fingerprint a = random_fingerprint(64, 5);
    CHECK(pmin(a, a, NoiseModel{1.0}) == 0.5);

    // ||diff|| = 2 sigma gives Q(1)
    Fingerprint b = a;
    b[0] += 2.0;
    CHECK(pmin(a, b, NoiseModel{1.0}) == doctest::Approx(0.15865525393146).epsilon(1e-6));
}

TEST_CASE("pmin is strictly decreasing in the signal separation") {
    const Fingerprint a = random_fingerprint(32, 6);
    Fingerprint direction = random_fingerprint(32, 7);
    direction /= direction.norm();
    double previous = 0.5;
    for (const double t : {0.2, 0.5, 1.0, 2.0, 4.0}) {
        const double p = pmin(a, a + t * direction, NoiseModel{1.0});
        CHECK(p < previous);
        previous = p;
    }
}

TEST_CASE("pmin agrees with the Monte-Carlo MAP detector") {
    const Fingerprint a = random_fingerprint(16, 8);
    Fingerprint direction = random_fingerprint(16, 9);
    direction /= direction.norm();
    const std::int64_t n_trials = 1000000;
    for (const double ratio : {0.5, 1.0, 2.0}) {
        const Fingerprint b = a + 2.0 * ratio * direction; // ||diff||/(2 sigma) = ratio
        const NoiseModel noise{1.0};
        const double p = pmin(a, b, noise);
        const double p_hat = monte_carlo_pmin(a, b, noise, n_trials, 77);
        const double band = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n_trials));
        CHECK(std::abs(p - p_hat) < band);
    }
}

TEST_CASE("monte_carlo_pmin contracts") {
    const Fingerprint a = random_fingerprint(16, 10);
    const NoiseModel noise{1.0};
    const double same = monte_carlo_pmin(a, a, noise, 100000, 3);
    CHECK(std::abs(same - 0.5) < 3.0 * std::sqrt(0.25 / 100000.0));

    Fingerprint b = a;
    b[3] += 2.0; // ratio 1 -> Q(1)
    const double p = 0.15865525393146;
    const double band = 3.0 * std::sqrt(p * (1.0 - p) / 1e6);
    const double first = monte_carlo_pmin(a, b, noise, 1000000, 4);
    const double second = monte_carlo_pmin(a, b, noise, 1000000, 4);
    const double other = monte_carlo_pmin(a, b, noise, 1000000, 5);
    CHECK(first == second);
    CHECK(first != other);
    CHECK(std::abs(first - p) < band);
    CHECK(std::abs(other - p) < band);

    CHECK_THROWS_AS((void)monte_carlo_pmin(a, b, noise, 100, 1), PreconditionError);
}

TEST_CASE("the bound reaches the uniform-prior limit at extreme noise") {
    const Schedule s = conventional_schedule(50, 1);
    const QuadratureConfig quad{64};
    const Eigen::MatrixXd grid = fingerprint_grid(s, kRow1, {}, quad.n_grid);
    const double peak2 = grid.colwise().squaredNorm().maxCoeff();

    const double high = zzb(s, kRow1, NoiseModel{1e12 * peak2}, {}, quad);
    const double limit = kRow1.delta() * kRow1.delta() / 12.0; // 13333.33 for row 1
    CHECK(limit == doctest::Approx(13333.3333333).epsilon(1e-6));
    CHECK(high == doctest::Approx(limit).epsilon(0.01));
}

TEST_CASE("the bound collapses when signals are perfectly distinguishable") {
    const Schedule s = conventional_schedule(50, 1);
    const QuadratureConfig quad{64};
    const Eigen::MatrixXd grid = fingerprint_grid(s, kRow1, {}, quad.n_grid);
    double min_pair = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i + 1 < grid.cols(); ++i) {
        const double d2 = (grid.col(i) - grid.col(i + 1)).squaredNorm();
        if (d2 > 0.0) min_pair = std::min(min_pair, d2);
    }
    const double low = zzb(s, kRow1, NoiseModel{1e-12 * min_pair}, {}, quad);
    CHECK(low < 1e-3 * kRow1.delta() * kRow1.delta() / 12.0);
}

TEST_CASE("mid-noise bound value survives quadrature refinement") {
    const Schedule s = conventional_schedule(50, 1);
    const Eigen::MatrixXd grid = fingerprint_grid(s, kRow8, {}, 64);
    const double sigma = grid.cwiseAbs().maxCoeff() / 30.0; // peak SNR 30
    const NoiseModel noise{sigma * sigma};

    const double coarse = zzb(s, kRow8, noise, {}, QuadratureConfig{64});
    const double fine = oracles::zzb_reference(s, kRow8, noise.sigma2, {}, 256);
    CHECK(coarse == doctest::Approx(fine).epsilon(1e-2));
}

TEST_CASE("the bound is nondecreasing in the noise variance") {
    const Schedule s = conventional_schedule(30, 2);
    const Eigen::MatrixXd grid = fingerprint_grid(s, kRow8, {}, 32);
    const double peak = grid.cwiseAbs().maxCoeff();
    double previous = 0.0;
    for (const double snr : {100.0, 50.0, 20.0, 5.0, 1.0}) {
        const double sigma = peak / snr;
        const double value = zzb_from_grid(grid, kRow8.delta(), sigma * sigma);
        CHECK(value >= previous);
        previous = value;
    }
}

TEST_CASE("pmin and the bound are invariant under joint signal/noise scaling") {
    const double c = 3.0;
    const Fingerprint a = random_fingerprint(32, 11);
    const Fingerprint b = random_fingerprint(32, 12);
    const double p = pmin(a, b, NoiseModel{1.7});
    const double p_scaled = pmin(c * a, c * b, NoiseModel{c * c * 1.7});
    CHECK(p == doctest::Approx(p_scaled).epsilon(1e-12));

    const Schedule s = conventional_schedule(30, 2);
    const Eigen::MatrixXd grid = fingerprint_grid(s, kRow8, {}, 32);
    const double sigma2 = std::pow(grid.cwiseAbs().maxCoeff() / 30.0, 2);
    const double z = zzb_from_grid(grid, kRow8.delta(), sigma2);
    const double z_scaled = zzb_from_grid(c * grid, kRow8.delta(), c * c * sigma2);
    CHECK(z == doctest::Approx(z_scaled).epsilon(1e-12));
}

TEST_CASE("crb contracts") {
    const Schedule s = conventional_schedule(50, 1);
    const Tissue center{900.0, 65.0};
    const double base = crb(s, center, NoiseModel{1e-4}, {}, Param::T2);
    const double doubled = crb(s, center, NoiseModel{2e-4}, {}, Param::T2);
    CHECK(doubled == doctest::Approx(2.0 * base).epsilon(1e-14));

    // sum-of-squares structure: zero-derivative frames and permutations are
    // invisible
    Eigen::VectorXd d = random_fingerprint(20, 13);
    Eigen::VectorXd padded(21);
    padded << d, 0.0;
    CHECK(crb_from_derivative(d, NoiseModel{1.0}) == crb_from_derivative(padded, NoiseModel{1.0}));
    Eigen::VectorXd permuted = d.reverse();
    CHECK(crb_from_derivative(d, NoiseModel{1.0}) ==
          doctest::Approx(crb_from_derivative(permuted, NoiseModel{1.0})).epsilon(1e-15));

    // spot value against a Richardson-extrapolated derivative
    const Eigen::VectorXd coarse = signal_derivative(s, center, {}, Param::T2, 2e-3);
    const Eigen::VectorXd fine = signal_derivative(s, center, {}, Param::T2, 1e-3);
    const Eigen::VectorXd richardson = (4.0 * fine - coarse) / 3.0;
    const double oracle = 1e-4 / richardson.squaredNorm();
    CHECK(crb(s, center, NoiseModel{1e-4}, {}, Param::T2) ==
          doctest::Approx(oracle).epsilon(1e-3));
}

TEST_CASE("crb reports the non-identifiable case") {
    const Schedule s = Schedule{Eigen::VectorXd::Constant(1, 90.0),
                                Eigen::VectorXd::Constant(1, 20.0), 5.0};
    CHECK_THROWS_AS((void)crb(s, Tissue{1e9, 60.0}, NoiseModel{1.0}, {}, Param::T1),
                    NonIdentifiableError);
}

TEST_CASE("grid-MAP Monte-Carlo MSE hits the quantization floor at zero-ish noise") {
    const Schedule s = conventional_schedule(30, 2);
    const QuadratureConfig quad{16};
    const double h = kRow8.delta() / (quad.n_grid - 1);
    const MonteCarloMse r =
        monte_carlo_mse_stats(s, kRow8, NoiseModel{1e-20}, {}, quad, 2000, 21);
    CHECK(r.mse <= h * h / 4.0);
}

TEST_CASE("grid-MAP Monte-Carlo MSE stays prior-bounded under pure noise") {
    const Schedule s = conventional_schedule(30, 2);
    const QuadratureConfig quad{32};
    const Eigen::MatrixXd grid = fingerprint_grid(s, kRow8, {}, quad.n_grid);
    const double peak2 = grid.colwise().squaredNorm().maxCoeff();
    const double d2 = kRow8.delta() * kRow8.delta();
    const MonteCarloMse r =
        monte_carlo_mse_stats(s, kRow8, NoiseModel{1e12 * peak2}, {}, quad, 2000, 22);
    CHECK(r.mse <= d2 / 2.0);
    CHECK(r.mse >= d2 / 12.0);
}

TEST_CASE("the implemented bound lower-bounds the grid-MAP estimator") {
    const Schedule s = conventional_schedule(50, 1);
    const QuadratureConfig quad{64};
    const Eigen::MatrixXd grid = fingerprint_grid(s, kRow8, {}, quad.n_grid);
    const double peak = grid.cwiseAbs().maxCoeff();
    for (const double snr : {5.0, 30.0, 100.0}) {
        const NoiseModel noise{std::pow(peak / snr, 2)};
        const double bound = zzb(s, kRow8, noise, {}, quad);
        const MonteCarloMse mc = monte_carlo_mse_stats(s, kRow8, noise, {}, quad, 2000, 33);
        CHECK(mc.mse >= bound - 2.0 * mc.std_error);
    }
}

TEST_CASE("quadrature config is validated") {
    const Schedule s = conventional_schedule(20, 2);
    CHECK_THROWS_AS((void)zzb(s, kRow8, NoiseModel{1.0}, {}, QuadratureConfig{8}),
                    PreconditionError);
    CHECK_THROWS_AS((void)zzb(s, kRow8, NoiseModel{0.0}, {}, QuadratureConfig{32}),
                    PreconditionError);
}
