#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dceseg/grid.hpp"

namespace dceseg {

// Observed intensity sequence on a voxel grid. Data is voxel-major:
// data[v * n + j] is the intensity of voxel v at time index j.
struct RawSequence {
    GridDims dims;
    std::vector<double> times;  // strictly increasing acquisition times, size n >= 4
    std::vector<double> data;   // nonnegative, size voxel_count() * n

    std::uint32_t time_count() const { return std::uint32_t(times.size()); }
    std::span<const double> voxel(std::size_t v) const {
        return {data.data() + v * times.size(), times.size()};
    }
    void validate() const;
};

// Variance-stabilized sequence: every entry carries unit noise under the
// power-transform observation model. Optionally baseline-removed, in which
// case `times` holds only the retained tail.
struct StabilizedSequence {
    GridDims dims;
    std::vector<double> times;
    std::vector<double> data;          // voxel-major, voxel_count() * time_count()
    double exponent = 0.45;            // stabilization exponent a in (0,1)
    std::uint32_t baseline_count = 0;  // images averaged into the removed baseline
    bool enhanced = false;

    std::uint32_t time_count() const { return std::uint32_t(times.size()); }
    std::span<const double> voxel(std::size_t v) const {
        return {data.data() + v * times.size(), times.size()};
    }
    std::span<double> voxel(std::size_t v) {
        return {data.data() + v * times.size(), times.size()};
    }
    void validate() const;
};

// Per-voxel, per-time normalized residuals against cluster mean curves.
// Voxels in singleton clusters carry no residuals (the normalization is
// undefined there); their cluster labels are listed in `skipped_clusters`.
struct ResidualField {
    GridDims dims;
    std::uint32_t time_count = 0;
    std::vector<double> values;         // voxel-major; meaningful where valid
    std::vector<std::uint8_t> valid;    // per voxel
    std::vector<std::int32_t> skipped_clusters;
    std::vector<std::int32_t> labels;   // the partition the field was computed against
};

// I = Phi^a / a, elementwise. Requires a in (0,1) and nonnegative data.
StabilizedSequence stabilize(const RawSequence& raw, double exponent);

// Estimate the per-voxel baseline as the mean of the first n0 images, then
// keep (I - baseline)/sqrt(1 + 1/n0) for the remaining images. Requires
// 1 <= n0 <= n - 2 and a sequence not already enhanced.
StabilizedSequence remove_baseline(const StabilizedSequence& seq, std::uint32_t n0);

// xi = (I - cluster mean)/sqrt(1 - 1/|C|) for |C| >= 2; singletons skipped.
ResidualField normalized_residuals(const StabilizedSequence& seq,
                                   std::span<const std::int32_t> labels);

}  // namespace dceseg
