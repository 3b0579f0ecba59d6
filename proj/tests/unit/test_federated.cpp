#include <cmath>
#include <numeric>

#include "doctest.h"
#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"
#include "zks/federated/federated.hpp"

using namespace zks;
using namespace zks::federated;

namespace {

double norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

}  // namespace

TEST_CASE("clipping below the norm bound is the identity") {
    const std::vector<double> u = {0.3, 0.4};
    CHECK(clip_update(u, 1.0) == u);
}

TEST_CASE("clipping a norm-4 update to 1") {
    const std::vector<double> u = {0.0, 4.0, 0.0};
    const auto c = clip_update(u, 1.0);
    CHECK(norm(c) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c[1] == 1.0);
    CHECK_THROWS_AS(clip_update(u, 0.0), ParameterError);
}

TEST_CASE("clipped norms never exceed C and clipping is idempotent") {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double clip = rng.uniform(0.1, 3.0);
        const auto u = random_vec(rng, 1 + rng.below(20), rng.uniform(0.01, 2.0));
        const auto c = clip_update(u, clip);
        REQUIRE(norm(c) <= clip * (1.0 + 1e-12));
        const auto cc = clip_update(c, clip);
        for (std::size_t j = 0; j < c.size(); ++j) REQUIRE(cc[j] == doctest::Approx(c[j]).epsilon(1e-12));
    }
}

TEST_CASE("zero noise multiplier is the identity") {
    const std::vector<double> u = {0.1, -0.2, 0.3};
    CHECK(privatize(u, 0.0, 1.0, 5) == u);
}

TEST_CASE("noise is deterministic per seed and differs across seeds") {
    const std::vector<double> u(8, 0.0);
    CHECK(privatize(u, 0.7, 1.0, 5) == privatize(u, 0.7, 1.0, 5));
    CHECK(privatize(u, 0.7, 1.0, 5) != privatize(u, 0.7, 1.0, 6));
}

TEST_CASE("empirical noise std matches sigma times C") {
    for (const double sigma : {0.5, 0.7, 1.0}) {
        const double clip = 1.0;
        const std::size_t draws = 100000;
        const std::vector<double> zero(4, 0.0);
        std::vector<double> sum(4, 0.0), sq(4, 0.0);
        for (std::size_t s = 0; s < draws; ++s) {
            const auto v = privatize(zero, sigma, clip, s);
            for (std::size_t j = 0; j < 4; ++j) {
                sum[j] += v[j];
                sq[j] += v[j] * v[j];
            }
        }
        for (std::size_t j = 0; j < 4; ++j) {
            const double mean = sum[j] / draws;
            const double sd = std::sqrt(sq[j] / draws - mean * mean);
            CHECK(std::abs(sd - sigma * clip) / (sigma * clip) < 0.02);
        }
    }
}

TEST_CASE("aggregation weights") {
    SUBCASE("single site passes through") {
        const std::vector<SiteUpdate> u = {{"a", {0.1, -2.0, 3.5}, 0.8, 0.05}};
        CHECK(aggregate(u) == u[0].delta);
    }
    SUBCASE("equal metrics give the plain average") {
        const std::vector<SiteUpdate> u = {{"a", {1.0, 2.0}, 0.7, 0.02}, {"b", {3.0, -2.0}, 0.7, 0.02}};
        const auto out = aggregate(u);
        CHECK(out[0] == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(out[1] == doctest::Approx(0.0));
    }
    SUBCASE("hand case") {
        const std::vector<SiteUpdate> u = {{"a", {1.0}, 0.9, 0.03}, {"b", {0.0}, 0.45, 0.03}};
        const auto w = site_weights(u);
        CHECK(w[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
        CHECK(w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(aggregate(std::vector<SiteUpdate>{}), ParameterError);
        const std::vector<SiteUpdate> bad = {{"a", {1.0}, 0.5, 0.1}, {"b", {1.0, 2.0}, 0.5, 0.1}};
        CHECK_THROWS_AS(aggregate(bad), ParameterError);
    }
}

TEST_CASE("aggregate lies in the convex hull and weights sum to one") {
    Rng rng(3);
    for (int t = 0; t < 1000; ++t) {
        const auto sites = 1 + rng.below(6);
        const auto n = 1 + rng.below(10);
        std::vector<SiteUpdate> u;
        for (std::size_t s = 0; s < sites; ++s)
            u.push_back({"s" + std::to_string(s), random_vec(rng, n, 1.0), rng.uniform(0.01, 1.0), rng.uniform(0.0, 0.3)});
        const auto w = site_weights(u);
        REQUIRE(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) < 1e-12);
        for (double x : w) REQUIRE(x >= 0.0);
        // Coordinate-wise within [min, max] of the inputs, a necessary hull condition.
        const auto out = aggregate(u);
        for (std::size_t i = 0; i < n; ++i) {
            double lo = u[0].delta[i], hi = lo;
            for (const auto& s : u) {
                lo = std::min(lo, s.delta[i]);
                hi = std::max(hi, s.delta[i]);
            }
            REQUIRE(out[i] >= lo - 1e-12);
            REQUIRE(out[i] <= hi + 1e-12);
        }
    }
}
