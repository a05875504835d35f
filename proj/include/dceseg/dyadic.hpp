#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dceseg {

// Nested almost-regular partitions of the time indices {0..n-1}. Level K
// splits the axis into 2^K contiguous blocks; block k at level K covers
// indices j with (k-1)/2^K < (j+1)/n <= k/2^K (1-based form), and level K-1
// blocks are exact unions of level-K block pairs.
struct DyadicScheme {
    std::uint32_t n = 0;
    int max_level = 0;  // K0 = floor(log2 n) - 1

    // Half-open boundaries of the 2^max_level finest blocks; block r is
    // [base_offsets[r], base_offsets[r+1]).
    std::vector<std::uint32_t> base_offsets;

    std::uint32_t block_count(int level) const { return 1u << level; }
    std::uint32_t block_begin(int level, std::uint32_t k) const {
        return base_offsets[std::size_t(k) << (max_level - level)];
    }
    std::uint32_t block_end(int level, std::uint32_t k) const {
        return base_offsets[std::size_t(k + 1) << (max_level - level)];
    }
    std::uint32_t block_size(int level, std::uint32_t k) const {
        return block_end(level, k) - block_begin(level, k);
    }
};

// Requires n >= 4 (so there are at least two levels).
DyadicScheme build_scheme(std::uint32_t n);

// Squared norms of the successive projection residuals of a vector on the
// dyadic mean pyramid, one per level, with their chi-squared dof under unit
// white noise: dof 1 at levels 0 and 1, 2^(K-1) above.
struct ScaleStats {
    std::vector<double> stat;           // size max_level + 1
    std::vector<std::uint32_t> dof;
};

ScaleStats scale_stats(std::span<const double> values, const DyadicScheme& scheme);

// Maximum of the per-level statistics (the only reduction the tests need).
double scale_stats_max(std::span<const double> values, const DyadicScheme& scheme);

namespace detail {
// Core shared with the pairwise test kernel: per-level statistics from
// finest-level block sums. `sums` (2^max_level entries) is consumed as
// scratch; `out_stat` receives max_level+1 values.
void stats_from_base_sums(const DyadicScheme& scheme, double* sums, double* out_stat);
}  // namespace detail

}  // namespace dceseg
