#include <cmath>

#include "doctest.h"
#include "dceseg/model.hpp"
#include "dceseg/rng.hpp"
#include "dceseg/special.hpp"
#include "test_util.hpp"

using namespace dceseg;

namespace {

RawSequence tiny_raw(std::vector<double> values) {
    RawSequence raw;
    raw.dims = GridDims::d2(1, 1);
    raw.times.resize(values.size());
    for (std::size_t j = 0; j < values.size(); ++j)
        raw.times[j] = double(j + 1);
    raw.data = std::move(values);
    return raw;
}

StabilizedSequence tiny_stab(std::vector<double> values) {
    StabilizedSequence seq;
    seq.dims = GridDims::d2(1, 1);
    seq.times.resize(values.size());
    for (std::size_t j = 0; j < values.size(); ++j)
        seq.times[j] = double(j + 1);
    seq.data = std::move(values);
    return seq;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("stabilize: pointwise values") {
    auto out = stabilize(tiny_raw({4.0, 0.0, 100.0, 1.0}), 0.5);
    CHECK(out.data[0] == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(out.data[1] == 0.0);

    out = stabilize(tiny_raw({100.0, 1.0, 2.0, 3.0}), 0.45);
    CHECK(out.data[0] == doctest::Approx(17.6517385494284778).epsilon(1e-12));
    CHECK_FALSE(out.enhanced);
    CHECK(out.baseline_count == 0);
}

TEST_CASE("stabilize: rejects bad exponent and negative data") {
    CHECK_THROWS_AS(stabilize(tiny_raw({1, 2, 3, 4}), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(stabilize(tiny_raw({1, 2, 3, 4}), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(stabilize(tiny_raw({1, 2, 3, 4}), 1.5), std::invalid_argument);
    CHECK_THROWS_AS(stabilize(tiny_raw({1, -2, 3, 4}), 0.45), std::invalid_argument);
}

TEST_CASE("stabilize: strictly monotone, zero fixed point") {
    const CounterRng rng(11);
    for (int i = 0; i < 200; ++i) {
        const double a = 0.05 + 0.9 * rng.uniform(0, i);
        double x = 50.0 * rng.uniform(1, i);
        double y = x + 1e-3 + 10.0 * rng.uniform(2, i);
        auto out = stabilize(tiny_raw({x, y, 1.0, 2.0}), a);
        CHECK(out.data[0] < out.data[1]);
    }
    CHECK(stabilize(tiny_raw({0, 1, 2, 3}), 0.3).data[0] == 0.0);
}

TEST_CASE("remove_baseline: pointwise values") {
    // constant input: every enhancement is zero
    auto out = remove_baseline(tiny_stab({3.0, 3.0, 3.0, 3.0, 3.0}), 2);
    for (double v : out.data)
        CHECK(v == 0.0);
    CHECK(out.enhanced);
    CHECK(out.baseline_count == 2);
    CHECK(out.times.size() == 3);
    CHECK(out.times[0] == 3.0);
}

TEST_CASE("remove_baseline: short-sequence guard and frozen values") {
    CHECK_THROWS_AS(remove_baseline(tiny_stab({2.0, 5.0}), 1), std::invalid_argument);

    // n0 = 1 on (2, 5, 5, 5): first retained entry (5-2)/sqrt(2)
    auto out = remove_baseline(tiny_stab({2.0, 5.0, 5.0, 5.0}), 1);
    CHECK(out.data[0] == doctest::Approx(2.1213203435596426).epsilon(1e-14));

    // n0 = 4 on (1,1,3,3,7): baseline 2, (7-2)/sqrt(1.25)
    out = remove_baseline(tiny_stab({1.0, 1.0, 3.0, 3.0, 7.0, 7.0}), 4);
    CHECK(out.data[0] == doctest::Approx(4.4721359549995794).epsilon(1e-14));
}

TEST_CASE("remove_baseline: n0 range errors and double application") {
    auto seq = tiny_stab({1, 2, 3, 4, 5});
    CHECK_THROWS_AS(remove_baseline(seq, 0), std::invalid_argument);
    CHECK_THROWS_AS(remove_baseline(seq, 4), std::invalid_argument);
    auto once = remove_baseline(seq, 1);
    CHECK_THROWS_AS(remove_baseline(once, 1), std::invalid_argument);
}

TEST_CASE("normalized_residuals: pointwise values and singleton skipping") {
    // Two voxels, one cluster; at each time mean is centered.
    StabilizedSequence seq;
    seq.dims = GridDims::d2(2, 1);
    seq.times = {1, 2, 3, 4};
    seq.data = {3, 3, 3, 3, 5, 5, 5, 5};  // voxel 0 = 3s, voxel 1 = 5s
    const std::vector<std::int32_t> one_cluster{0, 0};
    auto res = normalized_residuals(seq, one_cluster);
    CHECK(res.values[0] == doctest::Approx(-1.4142135623730951).epsilon(1e-14));
    CHECK(res.values[4] == doctest::Approx(1.4142135623730951).epsilon(1e-14));
    CHECK(res.skipped_clusters.empty());

    // all voxels identical -> all residuals zero
    seq.data = {5, 5, 5, 5, 5, 5, 5, 5};
    res = normalized_residuals(seq, one_cluster);
    for (std::size_t v = 0; v < 2; ++v)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(res.values[v * 4 + j] == 0.0);

    // |C| = 4, values (0,0,0,4) at one time
    StabilizedSequence quad;
    quad.dims = GridDims::d2(4, 1);
    quad.times = {1, 2, 3, 4};
    quad.data.assign(16, 0.0);
    quad.data[3 * 4 + 0] = 4.0;  // voxel 3, time 0
    const std::vector<std::int32_t> all{0, 0, 0, 0};
    res = normalized_residuals(quad, all);
    CHECK(res.values[0] == doctest::Approx(-1.1547005383792515).epsilon(1e-14));
    CHECK(res.values[3 * 4 + 0] == doctest::Approx(3.4641016151377546).epsilon(1e-14));
    double mean = 0.0;
    for (std::size_t v = 0; v < 4; ++v)
        mean += res.values[v * 4 + 0];
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));

    // singleton cluster is skipped and reported
    const std::vector<std::int32_t> with_singleton{0, 0, 0, 7};
    res = normalized_residuals(quad, with_singleton);
    CHECK(res.skipped_clusters == std::vector<std::int32_t>{7});
    CHECK(res.valid[3] == 0);
    CHECK(res.valid[0] == 1);
}

TEST_CASE("variance stabilization: unit empirical variance under the noise model") {
    // Phi ~ N(phi, phi^(2-2a)); after I = Phi^a/a the noise variance is 1.
    const double a = 0.45, phi = 400.0;
    const double i_true = std::pow(phi, a) / a;
    const double sd = std::pow(phi, 1.0 - a);
    const CounterRng rng(123);
    const std::size_t draws = 200000;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < draws; ++k) {
        const double obs = phi + sd * rng.normal(0, k);
        REQUIRE(obs > 0.0);
        const double err = std::pow(obs, a) / a - i_true;
        s1 += err;
        s2 += err * err;
    }
    const double var = (s2 - s1 * s1 / double(draws)) / double(draws - 1);
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("normalized residuals of unit-noise data pass the normal KS test") {
    int pass = 0;
    const int seeds = 40;
    for (int s = 0; s < seeds; ++s) {
        auto seq = testutil::noise_sequence(GridDims::d2(8, 8), 16, 1000 + std::uint64_t(s));
        // two-cluster partition: left and right halves
        std::vector<std::int32_t> labels(64);
        for (std::uint32_t y = 0; y < 8; ++y)
            for (std::uint32_t x = 0; x < 8; ++x)
                labels[seq.dims.index(x, y)] = x < 4 ? 0 : 1;
        auto res = normalized_residuals(seq, labels);
        auto vals = testutil::sorted(res.values);
        const double d = ks_statistic(vals, [](double x) { return normal_cdf(x); });
        if (ks_pvalue(d, vals.size()) > 0.01)
            ++pass;
    }
    CHECK(pass >= seeds * 95 / 100);
}

TEST_SUITE_END();
