#include "dceseg/equivtest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dceseg/special.hpp"

namespace dceseg {

double noncentral_chisq_cdf(double x, std::uint32_t dof, double lambda) {
    if (dof < 1)
        throw std::invalid_argument("noncentral_chisq_cdf: dof must be >= 1");
    if (!std::isfinite(lambda) || lambda < 0.0 || std::isnan(x))
        throw std::invalid_argument("noncentral_chisq_cdf: non-finite parameter");
    if (x <= 0.0)
        return 0.0;
    if (std::isinf(x))
        return 1.0;

    const double half_dof = 0.5 * double(dof);
    const double z = 0.5 * x;
    if (lambda == 0.0)
        return gamma_p(half_dof, z);

    const double h = 0.5 * lambda;  // Poisson mixing mean
    const std::uint64_t mode = std::uint64_t(h);

    // Central-CDF ladder: with a_k = dof/2 + k,
    //   C_{k+1} = C_k - t_k,  t_k = z^{a_k} e^{-z} / Gamma(a_k + 1),
    // so one incomplete-gamma evaluation at the modal index seeds both
    // directions and every other term costs O(1).
    const double w_mode = std::exp(-h + double(mode) * std::log(h) - std::lgamma(double(mode) + 1.0));
    const double c_mode = gamma_p(half_dof + double(mode), z);

    double total = w_mode * c_mode;

    // Upward: weights decay at ratio h/(i+1) < 1 past the mode and C is
    // nonincreasing in the index, so the unprocessed tail starting at i+1 is
    // at most c * w * r/(1-r).
    {
        double w = w_mode, c = c_mode;
        double t = std::exp((half_dof + double(mode)) * std::log(z) - z -
                            std::lgamma(half_dof + double(mode) + 1.0));
        std::uint64_t i = mode;
        while (c > 0.0 && i < mode + 100000000ull) {
            const double r = h / double(i + 1);
            if (r < 1.0 && c * w * r / (1.0 - r) < 1e-14)
                break;
            w *= r;
            c -= t;
            if (c < 0.0) c = 0.0;
            ++i;
            total += w * c;
            t *= z / (half_dof + double(i));
        }
    }

    // Downward to index 0; below the mode the weights decay at ratio i/h and
    // C <= 1, so the unprocessed tail is at most w/(1 - q).
    if (mode > 0) {
        double w = w_mode, c = c_mode;
        double t = std::exp((half_dof + double(mode) - 1.0) * std::log(z) - z -
                            std::lgamma(half_dof + double(mode)));
        std::uint64_t i = mode;
        while (i > 0) {
            w *= double(i) / h;
            c += t;
            if (c > 1.0) c = 1.0;
            --i;
            total += w * c;
            if (i > 0) {
                const double q = double(i) / h;
                if (q < 1.0 && w / (1.0 - q) < 1e-15)
                    break;
                t *= (half_dof + double(i)) / z;
            }
        }
    }

    return std::clamp(total, 0.0, 1.0);
}

namespace {

void base_sums_of_difference(std::span<const double> sum_x, double inv_size_x,
                             std::span<const double> sum_y, double inv_size_y,
                             double inv_rho, const DyadicScheme& scheme, double* sums) {
    const std::uint32_t nb = scheme.block_count(scheme.max_level);
    for (std::uint32_t r = 0; r < nb; ++r) {
        double acc = 0.0, comp = 0.0;
        for (std::uint32_t j = scheme.base_offsets[r]; j < scheme.base_offsets[r + 1]; ++j) {
            const double d = (sum_x[j] * inv_size_x - sum_y[j] * inv_size_y) * inv_rho;
            const double y = d - comp;
            const double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
        sums[r] = acc;
    }
}

std::uint32_t level_dof(int level) {
    return (level <= 1) ? 1u : (1u << (level - 1));
}

}  // namespace

PairPValue pair_pvalue(std::span<const double> sum_x, std::size_t size_x,
                       std::span<const double> sum_y, std::size_t size_y,
                       const DyadicScheme& scheme, const MarginSpec& margin) {
    if (size_x == 0 || size_y == 0)
        throw std::invalid_argument("pair_pvalue: empty cluster");
    if (sum_x.size() != scheme.n || sum_y.size() != scheme.n)
        throw std::invalid_argument("pair_pvalue: curve length does not match scheme");

    const double rho = std::sqrt(1.0 / double(size_x) + 1.0 / double(size_y));
    std::vector<double> sums(scheme.block_count(scheme.max_level));
    base_sums_of_difference(sum_x, 1.0 / double(size_x), sum_y, 1.0 / double(size_y),
                            1.0 / rho, scheme, sums.data());

    PairPValue out;
    out.stats.stat.resize(std::size_t(scheme.max_level) + 1);
    out.stats.dof.resize(out.stats.stat.size());
    detail::stats_from_base_sums(scheme, sums.data(), out.stats.stat.data());

    const double lambda = margin.noncentrality();
    out.per_scale.resize(out.stats.stat.size());
    out.p = 0.0;
    for (int k = 0; k <= scheme.max_level; ++k) {
        out.stats.dof[std::size_t(k)] = level_dof(k);
        const double pk = noncentral_chisq_cdf(out.stats.stat[std::size_t(k)], level_dof(k), lambda);
        out.per_scale[std::size_t(k)] = pk;
        out.p = std::max(out.p, pk);
    }
    return out;
}

double pair_pvalue_max(std::span<const double> sum_x, std::size_t size_x,
                       std::span<const double> sum_y, std::size_t size_y,
                       const DyadicScheme& scheme, const MarginSpec& margin,
                       std::span<double> scratch) {
    const std::uint32_t nb = scheme.block_count(scheme.max_level);
    const std::size_t levels = std::size_t(scheme.max_level) + 1;
    double* sums = scratch.data();
    double* stat = scratch.data() + nb;

    const double rho = std::sqrt(1.0 / double(size_x) + 1.0 / double(size_y));
    base_sums_of_difference(sum_x, 1.0 / double(size_x), sum_y, 1.0 / double(size_y),
                            1.0 / rho, scheme, sums);
    detail::stats_from_base_sums(scheme, sums, stat);

    const double lambda = margin.noncentrality();
    double p = 0.0;
    for (std::size_t k = 0; k < levels; ++k)
        p = std::max(p, noncentral_chisq_cdf(stat[k], level_dof(int(k)), lambda));
    return p;
}

MarginBound min_margin(std::uint32_t n, double kappa) {
    if (n < 5)
        throw std::invalid_argument("min_margin: requires n >= 5");
    if (!(kappa > 0.0))
        throw std::invalid_argument("min_margin: kappa must be positive");
    const double ln2 = 0.69314718055994530942;
    const double second = 2.0 * (1.0 + kappa * ln2) * (std::log(double(n) / 2.0) / ln2);
    const double energy = std::max(std::sqrt(double(n)), second);
    return {energy, std::sqrt(energy / double(n))};
}

double wrong_binding_bound(std::size_t grid_size, std::uint32_t n, double kappa) {
    if (grid_size == 0 || n == 0 || !(kappa > 0.0))
        throw std::invalid_argument("wrong_binding_bound: arguments must be positive");
    return std::exp(3.0 * std::log(double(grid_size)) - kappa * std::log(double(n) / 2.0));
}

}  // namespace dceseg
