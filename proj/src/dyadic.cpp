#include "dceseg/dyadic.hpp"

#include <cmath>
#include <stdexcept>

namespace dceseg {

DyadicScheme build_scheme(std::uint32_t n) {
    if (n < 4)
        throw std::invalid_argument("dyadic scheme needs n >= 4");
    DyadicScheme s;
    s.n = n;
    s.max_level = int(std::floor(std::log2(double(n)))) - 1;
    // floor(log2) via doubles is exact for the uint32 range, but keep it honest:
    while ((1u << (s.max_level + 1)) > n) --s.max_level;
    while ((1u << (s.max_level + 2)) <= n) ++s.max_level;

    const std::uint32_t nb = 1u << s.max_level;
    s.base_offsets.resize(nb + 1);
    // Block r (1-based) holds indices j with (r-1)/nb < j/n <= r/nb, i.e.
    // the half-open 0-based range (floor((r-1)n/nb), floor(rn/nb)].
    for (std::uint32_t r = 0; r <= nb; ++r)
        s.base_offsets[r] = std::uint32_t((std::uint64_t(r) * n) >> s.max_level);
    return s;
}

namespace detail {

// Per-level squared residual norms from finest-level block sums; `sums` is
// consumed as scratch (blocks are pairwise collapsed level by level).
void stats_from_base_sums(const DyadicScheme& scheme, double* sums, double* out_stat) {
    for (int level = scheme.max_level; level >= 1; --level) {
        const std::uint32_t pairs = 1u << (level - 1);
        double acc = 0.0, comp = 0.0;
        for (std::uint32_t k = 0; k < pairs; ++k) {
            const double sa = sums[2 * k], sb = sums[2 * k + 1];
            const double la = double(scheme.block_size(level, 2 * k));
            const double lb = double(scheme.block_size(level, 2 * k + 1));
            const double diff = sa / la - sb / lb;
            const double term = diff * diff / (1.0 / la + 1.0 / lb);
            const double y = term - comp;
            const double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            sums[k] = sa + sb;
        }
        out_stat[level] = acc;
    }
    out_stat[0] = sums[0] * sums[0] / double(scheme.n);
}

}  // namespace detail

ScaleStats scale_stats(std::span<const double> values, const DyadicScheme& scheme) {
    if (values.size() != scheme.n)
        throw std::invalid_argument("vector length does not match scheme");
    const std::uint32_t nb = scheme.block_count(scheme.max_level);
    std::vector<double> sums(nb);
    for (std::uint32_t r = 0; r < nb; ++r) {
        double acc = 0.0, comp = 0.0;
        for (std::uint32_t j = scheme.base_offsets[r]; j < scheme.base_offsets[r + 1]; ++j) {
            const double y = values[j] - comp;
            const double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
        sums[r] = acc;
    }
    ScaleStats out;
    out.stat.resize(std::size_t(scheme.max_level) + 1);
    out.dof.resize(out.stat.size());
    detail::stats_from_base_sums(scheme, sums.data(), out.stat.data());
    for (int k = 0; k <= scheme.max_level; ++k)
        out.dof[std::size_t(k)] = (k <= 1) ? 1u : (1u << (k - 1));
    return out;
}

double scale_stats_max(std::span<const double> values, const DyadicScheme& scheme) {
    const ScaleStats s = scale_stats(values, scheme);
    double m = 0.0;
    for (double v : s.stat)
        m = std::max(m, v);
    return m;
}

}  // namespace dceseg
