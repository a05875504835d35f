#include "dceseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace dceseg {

namespace {

struct Contingency {
    std::int32_t np = 0, nq = 0;
    std::vector<double> pa, qb;                               // row/col sums
    std::unordered_map<std::uint64_t, double> cells;          // (i,j) -> count

    double cell(std::int32_t i, std::int32_t j) const {
        auto it = cells.find((std::uint64_t(std::uint32_t(i)) << 32) | std::uint32_t(j));
        return it == cells.end() ? 0.0 : it->second;
    }
};

Contingency contingency(const LabelMap& p, const LabelMap& q) {
    if (!(p.dims == q.dims))
        throw std::invalid_argument("partition grids differ");
    p.validate();
    q.validate();
    Contingency c;
    c.np = p.label_count();
    c.nq = q.label_count();
    c.pa.assign(std::size_t(c.np), 0.0);
    c.qb.assign(std::size_t(c.nq), 0.0);
    for (std::size_t v = 0; v < p.labels.size(); ++v) {
        const auto i = p.labels[v], j = q.labels[v];
        c.pa[std::size_t(i)] += 1.0;
        c.qb[std::size_t(j)] += 1.0;
        c.cells[(std::uint64_t(std::uint32_t(i)) << 32) | std::uint32_t(j)] += 1.0;
    }
    return c;
}

double pairs2(double m) { return 0.5 * m * (m - 1.0); }

struct Kahan {
    double acc = 0.0, comp = 0.0;
    void add(double x) {
        const double y = x - comp;
        const double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
};

}  // namespace

std::int32_t LabelMap::label_count() const {
    std::int32_t m = -1;
    for (auto l : labels)
        m = std::max(m, l);
    return m + 1;
}

void LabelMap::validate() const {
    dims.validate();
    if (labels.size() != dims.voxel_count())
        throw std::invalid_argument("label map size does not match grid");
    const std::int32_t lc = label_count();
    if (lc <= 0)
        throw std::invalid_argument("label map is empty");
    std::vector<std::uint8_t> seen(std::size_t(lc), 0);
    for (auto l : labels) {
        if (l < 0)
            throw std::invalid_argument("negative label");
        seen[std::size_t(l)] = 1;
    }
    for (auto s : seen)
        if (!s)
            throw std::invalid_argument("labels are not contiguous from 0");
}

IndexValue fm_index(const LabelMap& p, const LabelMap& q) {
    const Contingency c = contingency(p, q);
    double n11 = 0.0;
    for (const auto& [k, m] : c.cells)
        n11 += pairs2(m);
    double same_p = 0.0, same_q = 0.0;
    for (double a : c.pa) same_p += pairs2(a);
    for (double b : c.qb) same_q += pairs2(b);
    if (same_p == 0.0 || same_q == 0.0)
        return {0.0, true};
    return {n11 / std::sqrt(same_p * same_q), false};
}

IndexValue weighted_fm(const LabelMap& p, const LabelMap& q) {
    const Contingency c = contingency(p, q);
    const double nvox = double(p.labels.size());

    std::vector<double> w(std::size_t(c.np));
    for (std::int32_t i = 0; i < c.np; ++i)
        w[std::size_t(i)] = nvox / c.pa[std::size_t(i)];

    // Pairs co-clustered in both: within one contingency cell, weight w_i^2.
    Kahan w11;
    for (const auto& [key, m] : c.cells) {
        const auto i = std::int32_t(key >> 32);
        w11.add(pairs2(m) * w[std::size_t(i)] * w[std::size_t(i)]);
    }
    // Pairs co-clustered in P: weight w_i^2.
    Kahan wp;
    for (std::int32_t i = 0; i < c.np; ++i)
        wp.add(pairs2(c.pa[std::size_t(i)]) * w[std::size_t(i)] * w[std::size_t(i)]);
    // Pairs co-clustered in Q: 0.5 * ((sum of weights)^2 - sum of squares),
    // accumulated per Q-cluster over the P-rows crossing it.
    std::vector<double> s1(std::size_t(c.nq), 0.0), s2(std::size_t(c.nq), 0.0);
    for (const auto& [key, m] : c.cells) {
        const auto i = std::int32_t(key >> 32);
        const auto j = std::int32_t(key & 0xffffffffu);
        s1[std::size_t(j)] += m * w[std::size_t(i)];
        s2[std::size_t(j)] += m * w[std::size_t(i)] * w[std::size_t(i)];
    }
    Kahan wq;
    for (std::int32_t j = 0; j < c.nq; ++j)
        wq.add(0.5 * (s1[std::size_t(j)] * s1[std::size_t(j)] - s2[std::size_t(j)]));

    if (wp.acc <= 0.0 || wq.acc <= 0.0)
        return {0.0, true};
    return {w11.acc / std::sqrt(wp.acc * wq.acc), false};
}

std::vector<std::uint8_t> error_map(const LabelMap& p, const LabelMap& q) {
    const Contingency c = contingency(p, q);

    // Best match per P-cluster and per Q-cluster by overlap, smallest label
    // on ties.
    std::vector<std::int32_t> best_q(std::size_t(c.np), -1), best_p(std::size_t(c.nq), -1);
    std::vector<double> best_q_ov(std::size_t(c.np), -1.0), best_p_ov(std::size_t(c.nq), -1.0);
    std::vector<std::pair<std::uint64_t, double>> cells(c.cells.begin(), c.cells.end());
    std::sort(cells.begin(), cells.end());
    for (const auto& [key, m] : cells) {
        const auto i = std::int32_t(key >> 32);
        const auto j = std::int32_t(key & 0xffffffffu);
        if (m > best_q_ov[std::size_t(i)]) {
            best_q_ov[std::size_t(i)] = m;
            best_q[std::size_t(i)] = j;
        }
        if (m > best_p_ov[std::size_t(j)]) {
            best_p_ov[std::size_t(j)] = m;
            best_p[std::size_t(j)] = i;
        }
    }

    std::vector<std::uint8_t> mask(p.labels.size(), 0);
    for (std::size_t v = 0; v < p.labels.size(); ++v) {
        const auto i = p.labels[v], j = q.labels[v];
        if (best_q[std::size_t(i)] != j || best_p[std::size_t(j)] != i)
            mask[v] = 1;
    }
    return mask;
}

bool same_partition(const LabelMap& p, const LabelMap& q) {
    if (!(p.dims == q.dims) || p.labels.size() != q.labels.size())
        return false;
    std::unordered_map<std::int32_t, std::int32_t> fwd, bwd;
    for (std::size_t v = 0; v < p.labels.size(); ++v) {
        const auto a = p.labels[v], b = q.labels[v];
        auto [itf, newf] = fwd.try_emplace(a, b);
        if (!newf && itf->second != b)
            return false;
        auto [itb, newb] = bwd.try_emplace(b, a);
        if (!newb && itb->second != a)
            return false;
    }
    return true;
}

}  // namespace dceseg
