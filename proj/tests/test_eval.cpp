#include <cmath>

#include "doctest.h"
#include "dceseg/eval.hpp"
#include "dceseg/rng.hpp"
#include "oracles.hpp"

using namespace dceseg;

namespace {

LabelMap map_1d(std::vector<std::int32_t> labels) {
    LabelMap m;
    m.dims = GridDims::d2(std::uint32_t(labels.size()), 1);
    m.labels = std::move(labels);
    return m;
}

LabelMap random_map(std::uint32_t side, std::int32_t nlabels, std::uint64_t seed) {
    LabelMap m;
    m.dims = GridDims::d2(side, side);
    m.labels.resize(m.dims.voxel_count());
    const CounterRng rng(seed);
    // labels 0..nlabels-1, each guaranteed present
    for (std::size_t v = 0; v < m.labels.size(); ++v)
        m.labels[v] = std::int32_t(rng.uniform(0, v) * nlabels) % nlabels;
    for (std::int32_t l = 0; l < nlabels; ++l)
        m.labels[std::size_t(l)] = l;
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("fm index: frozen 3-point cases") {
    CHECK(fm_index(map_1d({0, 0, 1}), map_1d({0, 0, 1})).value == doctest::Approx(1.0));
    // P = {a,b}{c}, Q = {a}{b,c}: no co-clustered pair survives
    auto r = fm_index(map_1d({0, 0, 1}), map_1d({0, 1, 1}));
    CHECK(r.value == 0.0);
    CHECK_FALSE(r.degenerate);
    // P = {a,b,c}, Q = {a,b}{c}
    r = fm_index(map_1d({0, 0, 0}), map_1d({0, 0, 1}));
    CHECK(r.value == doctest::Approx(0.5773502691896258).epsilon(1e-14));
}

TEST_CASE("fm index: degenerate all-singleton case returns zero with a flag") {
    const auto r = fm_index(map_1d({0, 1, 2}), map_1d({2, 1, 0}));
    CHECK(r.value == 0.0);
    CHECK(r.degenerate);
}

TEST_CASE("weighted fm: frozen cases") {
    // P = {a,b}{c,d} against itself, then against the crossed split
    CHECK(weighted_fm(map_1d({0, 0, 1, 1}), map_1d({0, 0, 1, 1})).value == doctest::Approx(1.0));
    CHECK(weighted_fm(map_1d({0, 0, 1, 1}), map_1d({0, 1, 0, 1})).value == 0.0);
}

TEST_CASE("weighted fm punishes errors in small clusters harder") {
    // 4x4 grid: P has a 4-voxel cluster and a 12-voxel cluster; Q absorbs
    // P's small cluster entirely.
    LabelMap p, q;
    p.dims = q.dims = GridDims::d2(4, 4);
    p.labels.assign(16, 0);
    for (std::size_t v = 0; v < 4; ++v)
        p.labels[v] = 1;
    q.labels.assign(16, 0);
    const double fm = fm_index(p, q).value;
    const double wfm = weighted_fm(p, q).value;
    CHECK(wfm < fm);
}

TEST_CASE("fm is symmetric; weighted fm is not") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = random_map(6, 3, 100 + seed);
        const auto q = random_map(6, 4, 200 + seed);
        CHECK(fm_index(p, q).value == doctest::Approx(fm_index(q, p).value).epsilon(1e-14));
    }
    // asymmetry witness: unbalanced cluster sizes in p
    const auto p = map_1d({0, 0, 0, 0, 0, 0, 1, 1});
    const auto q = map_1d({0, 0, 0, 1, 1, 1, 1, 1});
    CHECK(weighted_fm(p, q).value != doctest::Approx(weighted_fm(q, p).value));
}

TEST_CASE("indices equal one exactly for partitions identical up to renaming") {
    const auto p = random_map(8, 4, 7);
    LabelMap q = p;
    for (auto& l : q.labels)
        l = (l + 2) % 4;  // renaming only
    // q labels stay contiguous: 0..3 all present
    CHECK(fm_index(p, q).value == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(weighted_fm(p, q).value == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(same_partition(p, q));

    LabelMap r = p;
    r.labels[17] = (r.labels[17] + 1) % 4;
    CHECK_FALSE(same_partition(p, r));
    CHECK(fm_index(p, r).value < 1.0);
    CHECK(weighted_fm(p, r).value < 1.0);
}

TEST_CASE("pair-count algebra matches brute-force enumeration") {
    for (std::uint32_t side : {4u, 6u, 8u}) {
        for (std::uint64_t seed = 0; seed < 6; ++seed) {
            const auto p = random_map(side, 3 + std::int32_t(seed % 3), 300 + seed);
            const auto q = random_map(side, 2 + std::int32_t(seed % 4), 400 + seed);
            CHECK(fm_index(p, q).value == doctest::Approx(oracle::brute_fm(p, q)).epsilon(1e-13));
            const double w = weighted_fm(p, q).value;
            CHECK(std::abs(w - oracle::brute_weighted_fm(p, q)) < 1e-12);
        }
    }
}

TEST_CASE("error map: identity, single relabel, halves") {
    const auto p = random_map(4, 3, 17);
    const auto empty = error_map(p, p);
    for (auto m : empty)
        CHECK(m == 0);

    // one voxel moved to an adjacent cluster: exactly that voxel marked
    LabelMap q = p;
    const std::size_t moved = 9;
    q.labels[moved] = (q.labels[moved] + 1) % 3;
    const auto mask = error_map(p, q);
    const auto ref = oracle::brute_error_map(p, q);
    CHECK(mask == ref);
    CHECK(mask[moved] == 1);
    std::size_t marked = 0;
    for (auto m : mask)
        marked += m;
    CHECK(marked == 1);

    // one cluster versus two equal halves: the non-matching half is marked
    const auto one = map_1d({0, 0, 0, 0});
    const auto halves = map_1d({0, 0, 1, 1});
    const auto hm = error_map(one, halves);
    CHECK(hm == oracle::brute_error_map(one, halves));
    CHECK(hm == std::vector<std::uint8_t>{0, 0, 1, 1});
}

TEST_CASE("error map matches the set-algebra oracle on random instances") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto p = random_map(6, 3, 500 + seed);
        const auto q = random_map(6, 4, 600 + seed);
        CHECK(error_map(p, q) == oracle::brute_error_map(p, q));
    }
}

TEST_CASE("error map is empty iff partitions are identical up to renaming") {
    const auto p = random_map(5, 4, 21);
    LabelMap q = p;
    for (auto& l : q.labels)
        l = 3 - l;
    auto mask = error_map(p, q);
    for (auto m : mask)
        CHECK(m == 0);
    q.labels[7] = (q.labels[7] + 1) % 4;
    mask = error_map(p, q);
    std::size_t marked = 0;
    for (auto m : mask)
        marked += m;
    CHECK(marked > 0);
}

TEST_CASE("shape mismatch is rejected") {
    const auto p = random_map(4, 2, 1);
    const auto q = random_map(5, 2, 2);
    CHECK_THROWS_AS(fm_index(p, q), std::invalid_argument);
    CHECK_THROWS_AS(weighted_fm(p, q), std::invalid_argument);
    CHECK_THROWS_AS(error_map(p, q), std::invalid_argument);
}

TEST_SUITE_END();
