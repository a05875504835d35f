#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dceseg/dyadic.hpp"

namespace dceseg {

// CDF of the non-central chi-squared distribution, absolute error <= 1e-10.
// Poisson-mixture series summed outward from the modal weight with a bound
// on the neglected tail mass; handles noncentrality up to ~1e6.
double noncentral_chisq_cdf(double x, std::uint32_t dof, double lambda);

// Scalar equivalence margin: the same tolerance at every scale, with
// noncentrality n * delta^2.
struct MarginSpec {
    double delta = 0.0;
    std::uint32_t n = 0;

    double noncentrality() const { return double(n) * delta * delta; }
};

// Union-intersection p-value of the multi-scale equivalence test between two
// averaged curves, together with its per-scale components.
struct PairPValue {
    std::vector<double> per_scale;
    double p = 0.0;  // max over scales
    ScaleStats stats;
};

PairPValue pair_pvalue(std::span<const double> sum_x, std::size_t size_x,
                       std::span<const double> sum_y, std::size_t size_y,
                       const DyadicScheme& scheme, const MarginSpec& margin);

// Allocation-free kernel for the clustering engine: same value as
// pair_pvalue(...).p. `scratch` must hold at least
// 2^max_level + (max_level+1) doubles.
double pair_pvalue_max(std::span<const double> sum_x, std::size_t size_x,
                       std::span<const double> sum_y, std::size_t size_y,
                       const DyadicScheme& scheme, const MarginSpec& margin,
                       std::span<double> scratch);

// Smallest admissible equivalence margin n*delta^2 guaranteeing the
// wrong-binding control at strength kappa, and the matching minimal delta:
// max{ sqrt(n), 2(1 + kappa ln 2) log2(n/2) }. Requires n >= 5.
struct MarginBound {
    double energy;     // required n * delta^2
    double delta_min;  // sqrt(energy / n)
};
MarginBound min_margin(std::uint32_t n, double kappa);

// Upper bound |X|^3 (n/2)^(-kappa) on the probability of ever binding two
// separated clusters before two unseparated ones; evaluated in log space.
double wrong_binding_bound(std::size_t grid_size, std::uint32_t n, double kappa);

}  // namespace dceseg
