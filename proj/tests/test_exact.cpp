#include "gbsv/exact.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace gbsv;

namespace {

// Independent route for small even M: integer binomial times long-double
// powers, no lgamma.
long double binom_ld(int n, int k) {
    long double b = 1.0L;
    for (int i = 1; i <= k; ++i) b = b * static_cast<long double>(n - k + i) / i;
    return b;
}

}  // namespace

TEST_CASE("exact distribution spot values at M=20, r=0.5", "[exact]") {
    const CountDistribution dist = exact_total_count_distribution(20, 0.5, 40);

    CHECK(dist.at(0) == Catch::Approx(0.090510434265985970).epsilon(1e-10));
    CHECK(dist.at(2) == Catch::Approx(0.19328708427739710).epsilon(1e-10));
    CHECK(dist.at(4) == Catch::Approx(0.22702292269714199).epsilon(1e-10));
    CHECK(dist.at(6) == Catch::Approx(0.19392503924270274).epsilon(1e-10));

    // integer-binomial cross-check
    const double p = 1.0 / (1.0 + std::pow(std::sinh(0.5), 2));
    for (int k = 0; k <= 10; ++k) {
        const long double want = binom_ld(10 + k - 1, k) *
                                 std::pow(static_cast<long double>(p), 10.0L) *
                                 std::pow(static_cast<long double>(1.0 - p), k);
        CHECK(dist.at(2 * k) ==
              Catch::Approx(static_cast<double>(want)).epsilon(1e-12));
    }

    for (int m = 1; m <= 39; m += 2) CHECK(dist.at(m) == 0.0);
}

TEST_CASE("exact distribution normalization, mean and tail", "[exact]") {
    for (const auto& [modes, r] : std::vector<std::pair<int, double>>{
             {1, 0.5}, {20, 0.5}, {200, 0.5}, {20, 1.2}}) {
        const CountDistribution dist = exact_total_count_distribution(modes, r);
        CHECK(1.0 - dist.sum() < 1e-10);
        CHECK(1.0 - dist.sum() > -1e-12);  // never overshoots

        const double mean_expected = modes * std::pow(std::sinh(r), 2);
        CHECK(dist.mean_count() == Catch::Approx(mean_expected).epsilon(1e-8));

        // monotone decay above the mode of the distribution
        int peak = 0;
        for (int m = 0; m <= dist.m_max; m += 2)
            if (dist.at(m) > dist.at(peak)) peak = m;
        for (int m = peak; m + 2 <= dist.m_max; m += 2)
            CHECK(dist.at(m + 2) / dist.at(m) < 1.0);
    }
}

TEST_CASE("exact peak probability at M=10^4 matches the 2-s.f. reference", "[exact]") {
    const CountDistribution dist = exact_total_count_distribution(10000, 0.5);
    double peak = 0.0;
    for (double v : dist.probability) peak = std::max(peak, v);
    CHECK(peak == Catch::Approx(0.0096026012973642).epsilon(1e-8));
    CHECK(std::round(peak * 1e4) / 1e4 == 0.0096);  // "maximum probability of 0.0096"
}

TEST_CASE("odd mode counts run through the real-order continuation", "[exact]") {
    const CountDistribution dist = exact_total_count_distribution(1, 0.5, 30);
    const double p = 1.0 / (1.0 + std::pow(std::sinh(0.5), 2));
    CHECK(dist.at(0) == Catch::Approx(std::sqrt(p)).epsilon(1e-12));
    CHECK(dist.at(0) == Catch::Approx(0.88681888397007391).epsilon(1e-10));
    CHECK(1.0 - dist.sum() < 1e-10);
}

TEST_CASE("exact module rejects invalid parameters", "[exact]") {
    CHECK_THROWS_AS(exact_total_count_distribution(0, 0.5, 10), ValidationError);
    CHECK_THROWS_AS(exact_total_count_distribution(10, 0.0, 10), ValidationError);
    CHECK_THROWS_AS(exact_total_count_distribution(10, -0.5, 10), ValidationError);
    CHECK_THROWS_AS(exact_total_count_distribution(10, 0.5, -1), ValidationError);
}

TEST_CASE("default count cutoff covers the spread and clamps at 30", "[exact]") {
    CHECK(default_count_cutoff(SqueezerBank({0.1})) == 30);
    const ExactParams params(200, 0.5);
    const int cutoff = default_count_cutoff(SqueezerBank(std::vector<double>(200, 0.5)));
    CHECK(cutoff >= static_cast<int>(params.mean_count() + 10.0 * params.count_std()));
    CHECK(cutoff <= static_cast<int>(params.mean_count() + 11.0 * params.count_std()) + 2);
}
