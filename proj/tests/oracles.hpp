#pragma once

// Test-only reference implementations, kept independent of the library's
// computation paths: explicit projection matrices instead of the block-sum
// pyramid, density quadrature instead of the CDF ladder, and a full-rescan
// merge loop instead of the lazy-deletion queue.

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "dceseg/clustering.hpp"
#include "dceseg/dyadic.hpp"
#include "dceseg/eval.hpp"
#include "dceseg/model.hpp"

namespace oracle {

// Dense n x n projector onto vectors constant on each level-`level` block
// (level -1 projects to zero).
std::vector<double> projection_matrix(const dceseg::DyadicScheme& scheme, int level);

// Squared Euclidean norms of successive projection residuals via the dense
// projectors.
std::vector<double> projection_scale_stats(std::span<const double> values,
                                           const dceseg::DyadicScheme& scheme);

// Non-central chi-squared density (Poisson mixture of central densities,
// summed outward from the modal weight).
double ncx2_pdf(double t, std::uint32_t dof, double lambda);

// CDF by adaptive Simpson quadrature of the density on the substituted axis
// t = u^2 (removes the dof=1 endpoint singularity).
double ncx2_cdf_quadrature(double x, std::uint32_t dof, double lambda);

// Full-rescan agglomeration: scans every active pair each iteration instead
// of using a priority queue. Must reproduce the engine's merge trace
// record-for-record.
struct NaiveResult {
    std::vector<dceseg::MergeRecord> trace;
    std::vector<std::int32_t> labels;  // per-voxel cluster ids
    std::uint32_t local_count = 0;
    std::uint32_t final_count = 0;
};

NaiveResult naive_segment(const dceseg::StabilizedSequence& seq, double alpha, double delta,
                          int connectivity, bool skip_global);

// O(|X|^2) pair enumeration versions of the agreement indices.
double brute_fm(const dceseg::LabelMap& p, const dceseg::LabelMap& q);
double brute_weighted_fm(const dceseg::LabelMap& p, const dceseg::LabelMap& q);

// Error map by literal set algebra over cluster member sets.
std::vector<std::uint8_t> brute_error_map(const dceseg::LabelMap& p, const dceseg::LabelMap& q);

}  // namespace oracle
