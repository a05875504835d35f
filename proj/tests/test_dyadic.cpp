#include <cmath>
#include <numeric>

#include "doctest.h"
#include "dceseg/dyadic.hpp"
#include "dceseg/special.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dceseg;

TEST_SUITE_BEGIN("dyadic");

TEST_CASE("build_scheme: exact dyadic, almost-regular and smallest cases") {
    auto s = build_scheme(8);
    CHECK(s.max_level == 2);
    CHECK(s.base_offsets == std::vector<std::uint32_t>{0, 2, 4, 6, 8});
    CHECK(s.block_begin(1, 0) == 0);
    CHECK(s.block_end(1, 0) == 4);
    CHECK(s.block_end(0, 0) == 8);

    s = build_scheme(10);
    CHECK(s.max_level == 2);
    // base blocks {1,2},{3,4,5},{6,7},{8,9,10} in 1-based time indices
    CHECK(s.base_offsets == std::vector<std::uint32_t>{0, 2, 5, 7, 10});

    s = build_scheme(4);
    CHECK(s.max_level == 1);
    CHECK(s.base_offsets == std::vector<std::uint32_t>{0, 2, 4});

    CHECK_THROWS_AS(build_scheme(3), std::invalid_argument);
}

TEST_CASE("scheme invariants: cover, nesting, defining inequality") {
    for (std::uint32_t n : {4u, 5u, 7u, 10u, 16u, 33u, 100u, 127u, 130u}) {
        const auto s = build_scheme(n);
        CHECK((1u << (s.max_level + 1)) <= n);
        CHECK((1u << (s.max_level + 2)) > n);
        for (int level = 0; level <= s.max_level; ++level) {
            CHECK(s.block_begin(level, 0) == 0);
            CHECK(s.block_end(level, s.block_count(level) - 1) == n);
            for (std::uint32_t k = 0; k < s.block_count(level); ++k) {
                CHECK(s.block_size(level, k) >= 1);
                if (k > 0)
                    CHECK(s.block_begin(level, k) == s.block_end(level, k - 1));
            }
            if (level > 0)
                for (std::uint32_t k = 0; k < s.block_count(level - 1); ++k) {
                    CHECK(s.block_begin(level - 1, k) == s.block_begin(level, 2 * k));
                    CHECK(s.block_end(level - 1, k) == s.block_end(level, 2 * k + 1));
                }
        }
        // defining inequality of the finest partition, 1-based indices
        const std::uint32_t nb = s.block_count(s.max_level);
        for (std::uint32_t r = 0; r < nb; ++r)
            for (std::uint32_t j = s.block_begin(s.max_level, r) + 1;
                 j <= s.block_end(s.max_level, r); ++j) {
                CHECK(double(r) / nb < double(j) / n);
                CHECK(double(j) / n <= double(r + 1) / nb);
            }
    }
}

TEST_CASE("scale_stats: frozen small cases") {
    const auto s8 = build_scheme(8);

    std::vector<double> zeros(8, 0.0);
    for (double v : scale_stats(zeros, s8).stat)
        CHECK(v == 0.0);

    std::vector<double> c(8, 2.5);
    auto st = scale_stats(c, s8);
    CHECK(st.stat[0] == doctest::Approx(8 * 2.5 * 2.5).epsilon(1e-14));
    CHECK(st.stat[1] == 0.0);
    CHECK(st.stat[2] == 0.0);

    std::vector<double> step{1, 1, 1, 1, -1, -1, -1, -1};
    st = scale_stats(step, s8);
    CHECK(st.stat[0] == doctest::Approx(0.0));
    CHECK(st.stat[1] == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(st.stat[2] == doctest::Approx(0.0));
    CHECK(st.dof == std::vector<std::uint32_t>{1, 1, 2});

    CHECK_THROWS_AS(scale_stats(zeros, build_scheme(10)), std::invalid_argument);
}

TEST_CASE("projection residuals are orthogonal and sum to the finest projection") {
    for (std::uint32_t n : {4u, 6u, 8u, 10u, 13u, 16u, 33u, 64u}) {
        const auto s = build_scheme(n);
        const auto d = testutil::normal_vector(n, 42 + n);
        std::vector<std::vector<double>> residuals;
        std::vector<double> prev(n, 0.0);
        for (int level = 0; level <= s.max_level; ++level) {
            std::vector<double> proj(n, 0.0);
            const auto m = oracle::projection_matrix(s, level);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t cidx = 0; cidx < n; ++cidx)
                    proj[r] += m[r * n + cidx] * d[cidx];
            std::vector<double> res(n);
            for (std::size_t j = 0; j < n; ++j)
                res[j] = proj[j] - prev[j];
            residuals.push_back(res);
            prev = proj;
        }
        for (std::size_t a = 0; a < residuals.size(); ++a)
            for (std::size_t b = a + 1; b < residuals.size(); ++b) {
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    dot += residuals[a][j] * residuals[b][j];
                CHECK(std::abs(dot) < 1e-10);
            }
        // sum of residuals equals the finest projection
        for (std::size_t j = 0; j < n; ++j) {
            double sum = 0.0;
            for (const auto& r : residuals)
                sum += r[j];
            CHECK(sum == doctest::Approx(prev[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("scale_stats equals explicit projection residual norms") {
    for (std::uint32_t n = 4; n <= 64; ++n) {
        const auto s = build_scheme(n);
        const auto d = testutil::normal_vector(n, 7000 + n);
        const auto fast = scale_stats(d, s);
        const auto slow = oracle::projection_scale_stats(d, s);
        REQUIRE(fast.stat.size() == slow.size());
        for (std::size_t k = 0; k < slow.size(); ++k) {
            const double tol = 1e-10 * std::max(1.0, std::abs(slow[k]));
            CHECK(std::abs(fast.stat[k] - slow[k]) <= tol);
        }
    }
}

TEST_CASE("per-level statistics follow their chi-squared laws") {
    const std::size_t draws = 10000;
    for (std::uint32_t n : {8u, 100u, 130u}) {
        const auto s = build_scheme(n);
        std::vector<std::vector<double>> samples(std::size_t(s.max_level) + 1);
        for (std::size_t d = 0; d < draws; ++d) {
            const auto v = testutil::normal_vector(n, 555, d);
            const auto st = scale_stats(v, s);
            for (std::size_t k = 0; k < st.stat.size(); ++k)
                samples[k].push_back(st.stat[k]);
        }
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const double dof = k <= 1 ? 1.0 : double(1u << (k - 1));
            auto sortd = testutil::sorted(samples[k]);
            const double dist =
                ks_statistic(sortd, [dof](double x) { return chisq_cdf(x, dof); });
            CHECK_MESSAGE(ks_pvalue(dist, draws) > 0.01,
                          "n=" << n << " level=" << k << " ks=" << dist);
        }
    }
}

TEST_CASE("per-block constant shifts at the parent level leave the statistic unchanged") {
    const CounterRng rng(99);
    for (std::uint32_t n : {8u, 10u, 25u, 64u}) {
        const auto s = build_scheme(n);
        const auto d = testutil::normal_vector(n, 88 + n);
        const auto base = scale_stats(d, s);
        for (int level = 1; level <= s.max_level; ++level) {
            auto shifted = d;
            for (std::uint32_t k = 0; k < s.block_count(level - 1); ++k) {
                const double c = 10.0 * rng.normal(level, k);
                for (std::uint32_t j = s.block_begin(level - 1, k); j < s.block_end(level - 1, k); ++j)
                    shifted[j] += c;
            }
            const auto st = scale_stats(shifted, s);
            CHECK(std::abs(st.stat[std::size_t(level)] - base.stat[std::size_t(level)]) < 1e-10);
        }
    }
}

TEST_SUITE_END();
