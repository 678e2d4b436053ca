#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gon/calibrator.hpp"
#include "gon/rng.hpp"

using gon::PiecewiseLinearFn;

TEST_CASE("construction rejects bad keypoints") {
    CHECK_THROWS_AS(PiecewiseLinearFn({1.0}, {2.0}), gon::InvalidRange);
    CHECK_THROWS_AS(PiecewiseLinearFn({1.0, 2.0}, {0.0}), gon::InvalidRange);
    CHECK_THROWS_AS(PiecewiseLinearFn({2.0, 1.0}, {0.0, 1.0}),
                    gon::InvalidRange);
    CHECK_THROWS_AS(PiecewiseLinearFn({1.0, 1.0}, {0.0, 1.0}),
                    gon::InvalidRange);
    CHECK_THROWS_AS(
        PiecewiseLinearFn({0.0, std::nan("")}, {0.0, 1.0}), gon::InvalidRange);
}

TEST_CASE("evaluation interpolates and clamps") {
    PiecewiseLinearFn f({0.0, 1.0, 3.0}, {-1.0, 0.0, 1.0});
    CHECK(f.eval(0.0) == -1.0);
    CHECK(f.eval(1.0) == 0.0);
    CHECK(f.eval(3.0) == 1.0);
    CHECK(f.eval(0.5) == doctest::Approx(-0.5));
    CHECK(f.eval(2.0) == doctest::Approx(0.5));
    // Outside the key range the end values extend flat.
    CHECK(f.eval(-5.0) == -1.0);
    CHECK(f.eval(10.0) == 1.0);
}

TEST_CASE("evaluation is exact at keypoints") {
    std::vector<double> keys{-2.0, -0.3, 0.1, 1.7, 5.0};
    std::vector<double> values{0.3, -1.1, 4.0, 4.0, -2.5};
    PiecewiseLinearFn f(keys, values);
    for (std::size_t k = 0; k < keys.size(); ++k) {
        CHECK(f.eval(keys[k]) == values[k]);
    }
}

TEST_CASE("inversion on increasing values") {
    PiecewiseLinearFn f({0.0, 1.0, 3.0}, {-1.0, 0.0, 1.0});
    CHECK(f.invert_at(-1.0) == 0.0);
    CHECK(f.invert_at(0.0) == 1.0);
    CHECK(f.invert_at(1.0) == 3.0);
    CHECK(f.invert_at(-0.5) == doctest::Approx(0.5));
    CHECK(f.invert_at(0.5) == doctest::Approx(2.0));
    CHECK_THROWS_AS(f.invert_at(1.5), gon::NotInvertibleAtValue);
    CHECK_THROWS_AS(f.invert_at(-1.5), gon::NotInvertibleAtValue);
}

TEST_CASE("inversion on decreasing values") {
    PiecewiseLinearFn f({0.0, 2.0, 3.0}, {4.0, 0.0, -2.0});
    CHECK(f.invert_at(4.0) == 0.0);
    CHECK(f.invert_at(2.0) == doctest::Approx(1.0));
    CHECK(f.invert_at(0.0) == doctest::Approx(2.0));
    CHECK(f.invert_at(-1.0) == doctest::Approx(2.5));
    CHECK_THROWS_AS(f.invert_at(5.0), gon::NotInvertibleAtValue);
}

TEST_CASE("flat run inverts to its left endpoint") {
    PiecewiseLinearFn f({0.0, 1.0, 2.0, 3.0}, {0.0, 1.0, 1.0, 2.0});
    CHECK(f.invert_at(1.0) == 1.0);
    // A flat run at the start maps to the first key.
    PiecewiseLinearFn g({0.0, 1.0, 2.0}, {0.0, 0.0, 1.0});
    CHECK(g.invert_at(0.0) == 0.0);
}

TEST_CASE("inversion round trip on random monotone functions") {
    gon::Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        std::size_t k = 2 + rng.index(6);
        std::vector<double> keys(k), values(k);
        double key = rng.uniform(-5.0, 0.0);
        double value = rng.uniform(-3.0, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            keys[i] = key;
            values[i] = value;
            key += rng.uniform(0.1, 2.0);
            value += rng.uniform(0.05, 1.0);
        }
        PiecewiseLinearFn f(keys, values);
        for (int probe = 0; probe < 20; ++probe) {
            double y = rng.uniform(values.front(), values.back());
            double x = f.invert_at(y);
            CHECK(f.eval(x) == doctest::Approx(y).epsilon(1e-12));
            CHECK(x >= keys.front());
            CHECK(x <= keys.back());
        }
    }
}

TEST_CASE("value weights reproduce evaluation") {
    PiecewiseLinearFn f({0.0, 1.0, 3.0}, {-1.0, 0.0, 1.0});
    gon::Rng rng(11);
    for (int probe = 0; probe < 100; ++probe) {
        double x = rng.uniform(-1.0, 4.0);
        gon::PlfWeights w = f.value_weights(x);
        REQUIRE(w.count >= 1);
        REQUIRE(w.count <= 2);
        double sum = 0.0, total = 0.0;
        for (int i = 0; i < w.count; ++i) {
            CHECK(w.weight[i] >= 0.0);
            CHECK(w.weight[i] <= 1.0);
            sum += w.weight[i] * f.values()[w.index[i]];
            total += w.weight[i];
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(sum == doctest::Approx(f.eval(x)).epsilon(1e-13));
    }
}

TEST_CASE("value weights collapse to one entry at keypoints and tails") {
    PiecewiseLinearFn f({0.0, 1.0, 3.0}, {-1.0, 0.0, 1.0});
    CHECK(f.value_weights(1.0).count == 1);
    CHECK(f.value_weights(1.0).index[0] == 1);
    CHECK(f.value_weights(-2.0).count == 1);
    CHECK(f.value_weights(-2.0).index[0] == 0);
    CHECK(f.value_weights(9.0).count == 1);
    CHECK(f.value_weights(9.0).index[0] == 2);
    CHECK(f.value_weights(0.5).count == 2);
}

TEST_CASE("sorted quantile endpoints and interpolation") {
    std::vector<double> odd{1.0, 2.0, 3.0};
    CHECK(gon::sorted_quantile(odd, 0.0) == 1.0);
    CHECK(gon::sorted_quantile(odd, 1.0) == 3.0);
    CHECK(gon::sorted_quantile(odd, 0.5) == 2.0);
    std::vector<double> even{1.0, 2.0, 3.0, 4.0};
    CHECK(gon::sorted_quantile(even, 0.5) == doctest::Approx(2.5));
    CHECK(gon::sorted_quantile(even, 0.25) == doctest::Approx(1.75));
    std::vector<double> single{5.0};
    CHECK(gon::sorted_quantile(single, 0.3) == 5.0);
}

TEST_CASE("quantile keypoints cover the domain") {
    std::vector<double> samples{1.0, 2.0, 3.0};
    auto keys = gon::init_keys_from_quantiles(samples, 3, 0.0, 4.0);
    REQUIRE(keys.size() == 3);
    CHECK(keys[0] == 0.0);
    CHECK(keys[1] == 2.0);
    CHECK(keys[2] == 4.0);
}

TEST_CASE("colliding quantiles are spread apart") {
    std::vector<double> samples{5.0, 5.0, 5.0};
    auto keys = gon::init_keys_from_quantiles(samples, 4, 0.0, 10.0);
    REQUIRE(keys.size() == 4);
    CHECK(keys[0] == 0.0);
    CHECK(keys[1] == doctest::Approx(5.0 - 1e-5).epsilon(1e-12));
    CHECK(keys[2] == doctest::Approx(5.0 + 1e-5).epsilon(1e-12));
    CHECK(keys[3] == 10.0);
}

TEST_CASE("quantile collisions at the endpoints keep the endpoint pinned") {
    std::vector<double> low(50, 0.0);
    auto keys = gon::init_keys_from_quantiles(low, 5, 0.0, 1.0);
    REQUIRE(keys.size() == 5);
    CHECK(keys[0] == 0.0);
    CHECK(keys[4] == 1.0);
    CHECK(std::is_sorted(keys.begin(), keys.end()));
    for (std::size_t i = 1; i < keys.size(); ++i) {
        CHECK(keys[i] > keys[i - 1]);
    }
}

TEST_CASE("quantile keypoints stay strictly increasing on random data") {
    gon::Rng rng(3);
    for (int rep = 0; rep < 100; ++rep) {
        std::size_t n = 1 + rng.index(40);
        std::vector<double> samples(n);
        // Coarse rounding forces many ties.
        for (auto& s : samples) s = std::round(rng.uniform(0.0, 4.0));
        std::size_t count = 2 + rng.index(9);
        auto keys = gon::init_keys_from_quantiles(samples, count, -1.0, 5.0);
        REQUIRE(keys.size() == count);
        CHECK(keys.front() == -1.0);
        CHECK(keys.back() == 5.0);
        for (std::size_t i = 1; i < keys.size(); ++i) {
            CHECK(keys[i] > keys[i - 1]);
        }
    }
}

TEST_CASE("quantile keypoint errors") {
    std::vector<double> samples{1.0, 2.0};
    CHECK_THROWS_AS(gon::init_keys_from_quantiles(samples, 1, 0.0, 1.0),
                    gon::InvalidRange);
    CHECK_THROWS_AS(gon::init_keys_from_quantiles(samples, 3, 1.0, 1.0),
                    gon::DegenerateInput);
    CHECK_THROWS_AS(gon::init_keys_from_quantiles({}, 3, 0.0, 1.0),
                    gon::DegenerateInput);
    // Two keypoints need no sample quantiles at all.
    auto keys = gon::init_keys_from_quantiles({}, 2, 0.0, 1.0);
    REQUIRE(keys.size() == 2);
    CHECK(keys[0] == 0.0);
    CHECK(keys[1] == 1.0);
}

TEST_CASE("set_values keeps keys") {
    PiecewiseLinearFn f({0.0, 1.0}, {0.0, 1.0});
    f.set_values({2.0, 5.0});
    CHECK(f.eval(0.0) == 2.0);
    CHECK(f.eval(1.0) == 5.0);
    CHECK_THROWS_AS(f.set_values({1.0}), gon::InvalidRange);
}
