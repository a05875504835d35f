#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dceseg/dyadic.hpp"
#include "dceseg/eval.hpp"
#include "dceseg/model.hpp"

namespace dceseg {

// Gamma-variate enhancement curve: amplitude * (t/peak)^sharpness *
// exp(sharpness * (1 - t/peak)), peaking at `peak_time` with value
// `amplitude`.
struct EnhancementCurve {
    double amplitude = 0.0;
    double peak_time = 60.0;
    double sharpness = 2.0;

    double operator()(double t) const;
};

// Piecewise-constant ground truth: one enhancement curve per label, unit
// Gaussian noise added per voxel and time. The SNR multiplier scales the
// true curves, never the noise.
struct PhantomSpec {
    GridDims dims;
    std::vector<std::int32_t> labels;
    std::vector<EnhancementCurve> curves;  // indexed by label
    std::vector<double> times;
    double snr = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GeneratedPhantom {
    StabilizedSequence sequence;
    LabelMap truth;
};

GeneratedPhantom generate(const PhantomSpec& spec, bool add_noise = true);

// 3-region chessboard: the grid is tiled with side/5 blocks and block (bx,by)
// takes label (bx+by) mod 3. Pass exactly 3 curves or none for the defaults.
PhantomSpec chessboard_spec(std::uint32_t side = 55, std::uint32_t n = 100,
                            std::span<const EnhancementCurve> curves = {},
                            double snr = 1.0, std::uint64_t seed = 0);

// 11 regions of varied size and shape: nested disks and a ring, a thin
// L-band, a two-piece disconnected region, a corner wedge, and small blobs
// down to a 6x6 square. Geometry scales with the side length (reference
// layout at side 112).
PhantomSpec phantom11_spec(std::uint32_t side = 112, std::uint32_t n = 120,
                           double snr = 1.0, std::uint64_t seed = 0);

// Noiseless pairwise discrepancies between region curves: the per-scale
// energies of the rescaled difference, their maximum, and the equivalent
// tolerance sqrt(max/n). With `singleton_sizes` the rescaling uses |X|=|Y|=1
// instead of the region sizes, which is the binding-time worst case.
struct PairSeparation {
    std::int32_t label_a = 0, label_b = 0;
    std::vector<double> per_scale;
    double max_energy = 0.0;
    double delta_equivalent = 0.0;
};

std::vector<PairSeparation> separation_report(const PhantomSpec& spec, const DyadicScheme& scheme,
                                              bool singleton_sizes = false);

}  // namespace dceseg
