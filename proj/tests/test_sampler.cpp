#include "gbsv/sampler.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace gbsv;

namespace {

struct GridMoments {
    double alpha_sq;
    double alpha_beta;
};

// Independent oracle: numerically integrate the squeezed-state phase-space
// density exp(-(a^2+b^2) coth(r)/2 + a b) on a uniform grid and read off the
// second moments. Trapezoid on a rapidly decaying smooth integrand converges
// far below the 1e-6 tolerance used here.
GridMoments grid_moments(double r, int points = 1201) {
    const double coth = 1.0 / std::tanh(r);
    const double sigma = std::sqrt(std::sinh(r) * std::cosh(r));
    const double l = 8.5 * sigma;
    const double h = 2.0 * l / (points - 1);
    double norm = 0.0, asq = 0.0, ab = 0.0;
    for (int i = 0; i < points; ++i) {
        const double a = -l + i * h;
        for (int j = 0; j < points; ++j) {
            const double b = -l + j * h;
            const double w = std::exp(-0.5 * (a * a + b * b) * coth + a * b);
            norm += w;
            asq += w * a * a;
            ab += w * a * b;
        }
    }
    return {asq / norm, ab / norm};
}

RunConfig small_config(int modes, std::vector<double> r, Representation rep,
                       std::uint64_t n_s, std::uint64_t n_r, std::uint64_t seed) {
    RunConfig config;
    config.modes = modes;
    config.squeezing = std::move(r);
    config.representation = rep;
    config.ensemble = {n_s, n_r};
    config.master_seed = seed;
    return config;
}

}  // namespace

TEST_CASE("mode law matches grid integration of the phase-space density", "[sampler]") {
    for (const double r : {0.3, 0.5, 0.9}) {
        const BivariateModeLaw law = mode_law(r);
        const GridMoments grid = grid_moments(r);
        CHECK(law.var == Catch::Approx(grid.alpha_sq).margin(1e-6));
        CHECK(law.cov == Catch::Approx(grid.alpha_beta).margin(1e-6));
    }
    // frozen closed-form values at r = 0.5
    const BivariateModeLaw law = mode_law(0.5);
    CHECK(law.var == Catch::Approx(0.58760059682190073).epsilon(1e-12));
    CHECK(law.cov == Catch::Approx(0.27154031740762189).epsilon(1e-12));
}

TEST_CASE("mode law limits and validation", "[sampler]") {
    const BivariateModeLaw tiny = mode_law(1e-8);
    CHECK(tiny.var < 2e-8);
    CHECK(tiny.cov < 2e-16);
    CHECK(tiny.var > tiny.cov);
    CHECK(tiny.cov > 0.0);

    // positive definiteness of [[var, cov], [cov, var]]
    for (const double r : {0.1, 0.5, 2.0}) {
        const BivariateModeLaw law = mode_law(r);
        CHECK(law.var > law.cov);
        CHECK(law.cov > 0.0);
        CHECK(law.var * law.var - law.cov * law.cov > 0.0);
    }

    CHECK_THROWS_AS(mode_law(0.0), ValidationError);
    CHECK_THROWS_AS(mode_law(-0.5), ValidationError);
}

TEST_CASE("drawn trajectories are real with CLT-consistent moments", "[sampler]") {
    const auto config =
        small_config(1, {0.5}, Representation::PositiveP, 2, 1000000, 91);
    const TrajectoryBatch batch = draw_trajectories(config, 0);
    CHECK(batch.stage == BatchStage::Input);
    CHECK(batch.samples() == 1000000);

    CHECK(batch.alpha.imag().cwiseAbs().maxCoeff() == 0.0);
    CHECK(batch.beta.imag().cwiseAbs().maxCoeff() == 0.0);

    double sum = 0.0, sumsq = 0.0;
    for (Eigen::Index k = 0; k < batch.samples(); ++k) {
        const double v = batch.alpha(k, 0).real() * batch.beta(k, 0).real();
        sum += v;
        sumsq += v * v;
    }
    const double n = static_cast<double>(batch.samples());
    const double mean = sum / n;
    const double sigma_clt = std::sqrt((sumsq / n - mean * mean) / n);
    CHECK(std::abs(mean - 0.27154031740762189) < 3.0 * sigma_clt);
}

TEST_CASE("two mode draw: per-mode covariances, independent modes", "[sampler]") {
    const auto config =
        small_config(2, {0.3, 0.7}, Representation::PositiveP, 2, 400000, 12345);
    const TrajectoryBatch batch = draw_trajectories(config, 1);

    for (int j = 0; j < 2; ++j) {
        double sum = 0.0, sumsq = 0.0;
        for (Eigen::Index k = 0; k < batch.samples(); ++k) {
            const double v = batch.alpha(k, j).real() * batch.beta(k, j).real();
            sum += v;
            sumsq += v * v;
        }
        const double n = static_cast<double>(batch.samples());
        const double mean = sum / n;
        const double sigma = std::sqrt((sumsq / n - mean * mean) / n);
        const double want = std::pow(std::sinh(config.squeezing[static_cast<std::size_t>(j)]), 2);
        CHECK(std::abs(mean - want) < 3.0 * sigma);
    }

    // inter-mode covariance consistent with zero
    double sum = 0.0, sumsq = 0.0;
    for (Eigen::Index k = 0; k < batch.samples(); ++k) {
        const double v = batch.alpha(k, 0).real() * batch.beta(k, 1).real();
        sum += v;
        sumsq += v * v;
    }
    const double n = static_cast<double>(batch.samples());
    const double mean = sum / n;
    const double sigma = std::sqrt((sumsq / n - mean * mean) / n);
    CHECK(std::abs(mean) < 4.0 * sigma);
}

TEST_CASE("draws are bit-identical per (master seed, index)", "[sampler]") {
    const auto config =
        small_config(3, {0.5, 0.5, 0.5}, Representation::MatrixPParity, 4, 2000, 77);
    const TrajectoryBatch a = draw_trajectories(config, 2);
    const TrajectoryBatch b = draw_trajectories(config, 2);
    CHECK(a.alpha == b.alpha);
    CHECK(a.beta == b.beta);

    const TrajectoryBatch c = draw_trajectories(config, 3);
    CHECK(a.alpha != c.alpha);

    CHECK_THROWS_AS(draw_trajectories(config, 4), ValidationError);
}

TEST_CASE("sampled total occupation has mean M sinh^2 r", "[sampler]") {
    const auto config = small_config(5, std::vector<double>(5, 0.5),
                                     Representation::PositiveP, 2, 200000, 5150);
    const TrajectoryBatch batch = draw_trajectories(config, 0);
    const CVector n = total_occupation(batch);
    double sum = 0.0, sumsq = 0.0;
    for (Eigen::Index k = 0; k < n.size(); ++k) {
        sum += n(k).real();
        sumsq += n(k).real() * n(k).real();
    }
    const double count = static_cast<double>(n.size());
    const double mean = sum / count;
    const double sigma = std::sqrt((sumsq / count - mean * mean) / count);
    CHECK(std::abs(mean - 5.0 * 0.27154031740762189) < 3.0 * sigma);
}

TEST_CASE("parity symmetrization contract", "[sampler]") {
    const auto config =
        small_config(2, {0.4, 0.6}, Representation::MatrixPParity, 2, 500, 2718);
    TrajectoryBatch batch = draw_trajectories(config, 0);
    const CMatrix beta_before = batch.beta;

    // antithetic marking leaves the samples untouched
    TrajectoryBatch anti = parity_symmetrize(batch);
    CHECK(anti.parity_symmetrized);
    CHECK(anti.parity_mode == ParityMode::Antithetic);
    CHECK(anti.beta == beta_before);

    // random mode flips whole rows, roughly half of them
    Rng rng(99);
    TrajectoryBatch flipped = parity_symmetrize(batch, &rng);
    CHECK(flipped.parity_symmetrized);
    CHECK(flipped.parity_mode == ParityMode::RandomSign);
    int flips = 0;
    for (Eigen::Index k = 0; k < batch.samples(); ++k) {
        const bool same = flipped.beta.row(k) == beta_before.row(k);
        const bool negated = flipped.beta.row(k) == (-beta_before.row(k)).eval();
        CHECK((same || negated));
        if (negated) ++flips;
    }
    CHECK(flips > 180);  // ~250 expected, binomial(500, 1/2)
    CHECK(flips < 320);

    TrajectoryBatch positive_p = batch;
    positive_p.representation = Representation::PositiveP;
    CHECK_THROWS_AS(parity_symmetrize(positive_p), ValidationError);
}
