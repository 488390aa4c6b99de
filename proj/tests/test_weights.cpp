#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "wbcp/core.hpp"
#include "wbcp/errors.hpp"
#include "wbcp/rng.hpp"
#include "wbcp/weights.hpp"

using namespace wbcp;

namespace {

CalibrationSet located_set(const std::vector<Point2>& locs) {
    std::vector<CalibrationRecord> recs;
    for (std::size_t i = 0; i < locs.size(); ++i)
        recs.push_back({static_cast<double>(i), locs[i], static_cast<std::int64_t>(i)});
    return CalibrationSet(std::move(recs));
}

}  // namespace

TEST_CASE("kish_neff") {
    CHECK(kish_neff({1, 1, 1, 1}) == doctest::Approx(4.0));
    CHECK(kish_neff({1, 0, 0}) == doctest::Approx(1.0));
    CHECK(kish_neff({1, 1, 2}) == doctest::Approx(16.0 / 6.0));
    CHECK_THROWS_AS(kish_neff({0, 0}), WeightDegeneracy);
    CHECK_THROWS_AS(kish_neff({1, -1}), InvalidInput);

    SUBCASE("rescale invariance and bounds") {
        Rng rng(555);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 1 + rng.next_u64() % 20;
            std::vector<double> w(n);
            std::size_t positive = 0;
            for (auto& wi : w) {
                wi = rng.next_u64() % 4 == 0 ? 0.0 : rng.uniform_pos();
                if (wi > 0) ++positive;
            }
            if (positive == 0) w[0] = 1.0, positive = 1;
            const double base = kish_neff(w);
            std::vector<double> scaled(n);
            const double c = 0.01 + 100 * rng.uniform01();
            for (std::size_t i = 0; i < n; ++i) scaled[i] = c * w[i];
            CHECK(kish_neff(scaled) == doctest::Approx(base).epsilon(1e-12));
            CHECK(base >= 1.0 - 1e-12);
            CHECK(base <= static_cast<double>(positive) + 1e-12);
        }
        // Upper bound attained only by equal positive weights.
        CHECK(kish_neff({2, 2, 0, 2}) == doctest::Approx(3.0));
        CHECK(kish_neff({2, 1, 0, 2}) < 3.0);
    }
}

TEST_CASE("gaussian_kernel_weights") {
    const Point2 origin{0, 0};
    const std::vector<Point2> locs = {{0, 0}, {2, 0}, {80, 0}};
    const double h = 2.0;
    const auto w = gaussian_kernel_weights(origin, locs, h);
    CHECK(w[0] == 1.0);
    CHECK(w[1] == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));  // distance == h
    CHECK(w[2] < 1e-200);                                           // distance = 40h
    CHECK_THROWS_AS(gaussian_kernel_weights(origin, locs, 0.0), InvalidInput);
}

TEST_CASE("adaptive_bandwidth") {
    const std::vector<Point2> on_axis = {{1, 0}, {2, 0}, {3, 0}};
    CHECK(adaptive_bandwidth({0, 0}, on_axis, 1.0, 3, 1e-9) == doctest::Approx(2.0));

    // Lower median for even k: distances {1,2,3,4} -> 2.
    const std::vector<Point2> four = {{1, 0}, {2, 0}, {3, 0}, {4, 0}};
    CHECK(adaptive_bandwidth({0, 0}, four, 1.0, 4, 1e-9) == doctest::Approx(2.0));

    // Constant distances d: h = max(h_min, h0 * d).
    const std::vector<Point2> ring = {{3, 0}, {-3, 0}, {0, 3}, {0, -3}};
    CHECK(adaptive_bandwidth({0, 0}, ring, 0.5, 4, 1e-9) == doctest::Approx(1.5));
    CHECK(adaptive_bandwidth({0, 0}, ring, 0.5, 4, 7.0) == doctest::Approx(7.0));

    // Coincident points engage the floor.
    const std::vector<Point2> same = {{1, 1}, {1, 1}, {1, 1}};
    CHECK(adaptive_bandwidth({1, 1}, same, 1.0, 3, 0.125) == doctest::Approx(0.125));

    CHECK_THROWS_AS(adaptive_bandwidth({0, 0}, ring, 1.0, 5, 1e-9), InvalidInput);
    CHECK_THROWS_AS(adaptive_bandwidth({0, 0}, ring, 1.0, 0, 1e-9), InvalidInput);
}

TEST_CASE("profile_from_kernel limits") {
    Rng rng(2024);
    std::vector<Point2> locs;
    for (int i = 0; i < 40; ++i)
        locs.push_back({rng.uniform(0, 20), rng.uniform(0, 20)});
    const auto cal = located_set(locs);
    const Point2 test{9.5, 9.5};

    SUBCASE("huge bandwidth approaches uniform") {
        KernelConfig kc;
        kc.bandwidth = FixedBandwidth{1e6 * bounding_box_diagonal(locs)};
        const auto p = profile_from_kernel(test, cal, kc);
        CHECK(p.neff == doctest::Approx(40.0).epsilon(1e-9));
        for (double w : p.normalized) CHECK(w == doctest::Approx(1.0 / 40).epsilon(1e-9));
    }
    SUBCASE("tiny bandwidth collapses onto the nearest neighbor") {
        KernelConfig kc;
        kc.bandwidth = FixedBandwidth{1e-4};
        const auto p = profile_from_kernel(test, cal, kc);
        CHECK(p.neff == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(*std::max_element(p.normalized.begin(), p.normalized.end()) ==
              doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("two equidistant neighbors split the mass") {
        const std::vector<Point2> pair_locs = {{1, 0}, {-1, 0}, {50, 50}, {-60, 40}};
        const auto pair_cal = located_set(pair_locs);
        KernelConfig kc;
        kc.bandwidth = FixedBandwidth{0.25};
        const auto p = profile_from_kernel({0, 0}, pair_cal, kc);
        CHECK(p.normalized[0] == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(p.normalized[1] == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(p.neff == doctest::Approx(2.0).epsilon(1e-9));
    }
    SUBCASE("missing locations") {
        std::vector<CalibrationRecord> recs = {{1.0, Point2{0, 0}, 0}, {2.0, std::nullopt, 1}};
        const CalibrationSet gapped(std::move(recs));
        KernelConfig kc;
        CHECK_THROWS_AS(profile_from_kernel({0, 0}, gapped, kc), MissingLocations);
    }
}

TEST_CASE("profile pruning keeps the profile aligned and normalized") {
    // One point far enough to fall below the prune threshold.
    const std::vector<Point2> locs = {{0, 0}, {0.5, 0}, {1000, 0}};
    const auto cal = located_set(locs);
    KernelConfig kc;
    kc.bandwidth = FixedBandwidth{1.0};
    const auto p = profile_from_kernel({0, 0}, cal, kc);
    REQUIRE(p.normalized.size() == 3);
    CHECK(p.normalized[2] == 0.0);
    CHECK(p.normalized[0] + p.normalized[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("uniform_profile is exact") {
    const auto p = uniform_profile(3);
    CHECK(p.uniform);
    CHECK(p.neff == 3.0);
    for (double w : p.normalized) CHECK(w == 1.0 / 3.0);
}

TEST_CASE("design_effect_adjustment") {
    CHECK(design_effect_adjustment(50.0, 4.0, 0.0) == doctest::Approx(50.0));
    CHECK(design_effect_adjustment(50.0, 5.0, 1.0) == doctest::Approx(10.0));
    CHECK(design_effect_adjustment(100.0, 5.0, 0.5) == doctest::Approx(100.0 / 3.0));
    CHECK_THROWS_AS(design_effect_adjustment(10.0, 0.5, 0.5), InvalidInput);
    CHECK_THROWS_AS(design_effect_adjustment(10.0, 2.0, 1.5), InvalidInput);
}
