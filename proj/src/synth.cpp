#include "dceseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dceseg/rng.hpp"
#include "parallel.hpp"

namespace dceseg {

double EnhancementCurve::operator()(double t) const {
    if (t <= 0.0 || amplitude == 0.0)
        return 0.0;
    const double u = t / peak_time;
    return amplitude * std::pow(u, sharpness) * std::exp(sharpness * (1.0 - u));
}

void PhantomSpec::validate() const {
    dims.validate();
    if (labels.size() != dims.voxel_count())
        throw std::invalid_argument("phantom labels do not cover the grid");
    if (times.size() < 4)
        throw std::invalid_argument("phantom needs at least 4 times");
    if (curves.empty())
        throw std::invalid_argument("phantom needs curves");
    for (auto l : labels)
        if (l < 0 || std::size_t(l) >= curves.size())
            throw std::invalid_argument("phantom label without a curve");
    for (const auto& c : curves)
        if (!std::isfinite(c.amplitude) || !(c.peak_time > 0.0) || !(c.sharpness > 0.0))
            throw std::invalid_argument("invalid curve parameters");
}

GeneratedPhantom generate(const PhantomSpec& spec, bool add_noise) {
    spec.validate();
    const std::size_t nvox = spec.dims.voxel_count();
    const std::uint32_t n = std::uint32_t(spec.times.size());

    // Curve values at the acquisition times, per label.
    std::vector<double> table(spec.curves.size() * n);
    for (std::size_t l = 0; l < spec.curves.size(); ++l)
        for (std::uint32_t j = 0; j < n; ++j)
            table[l * n + j] = spec.snr * spec.curves[l](spec.times[j]);

    GeneratedPhantom out;
    out.sequence.dims = spec.dims;
    out.sequence.times = spec.times;
    out.sequence.exponent = 0.45;
    out.sequence.baseline_count = 0;
    out.sequence.enhanced = false;
    out.sequence.data.resize(nvox * n);
    out.truth.dims = spec.dims;
    out.truth.labels = spec.labels;

    const CounterRng rng(spec.seed);
    double* data = out.sequence.data.data();
    detail::parallel_for(nvox, [&](std::size_t v, unsigned) {
        const double* curve = table.data() + std::size_t(spec.labels[v]) * n;
        double* dst = data + v * n;
        for (std::uint32_t j = 0; j < n; ++j)
            dst[j] = curve[j] + (add_noise ? rng.normal(v, j) : 0.0);
    });
    return out;
}

namespace {

std::vector<double> regular_times(std::uint32_t n, double t_end) {
    std::vector<double> t(n);
    for (std::uint32_t j = 0; j < n; ++j)
        t[j] = double(j + 1) * t_end / double(n);
    return t;
}

}  // namespace

PhantomSpec chessboard_spec(std::uint32_t side, std::uint32_t n,
                            std::span<const EnhancementCurve> curves, double snr,
                            std::uint64_t seed) {
    if (side < 5 || n < 4)
        throw std::invalid_argument("chessboard needs side >= 5 and n >= 4");
    if (!curves.empty() && curves.size() < 3)
        throw std::invalid_argument("chessboard needs 3 curves");

    PhantomSpec spec;
    spec.dims = GridDims::d2(side, side);
    spec.times = regular_times(n, 300.0);
    spec.snr = snr;
    spec.seed = seed;
    if (curves.empty())
        spec.curves = {{3.0, 60.0, 2.0}, {7.5, 95.0, 1.8}, {12.0, 45.0, 2.5}};
    else
        spec.curves.assign(curves.begin(), curves.begin() + 3);

    const std::uint32_t block = std::max(1u, side / 5);
    spec.labels.resize(spec.dims.voxel_count());
    for (std::uint32_t y = 0; y < side; ++y)
        for (std::uint32_t x = 0; x < side; ++x)
            spec.labels[spec.dims.index(x, y)] = std::int32_t(((x / block) + (y / block)) % 3);
    return spec;
}

PhantomSpec phantom11_spec(std::uint32_t side, std::uint32_t n, double snr, std::uint64_t seed) {
    if (side < 56 || n < 4)
        throw std::invalid_argument("phantom11 needs side >= 56 and n >= 4");

    PhantomSpec spec;
    spec.dims = GridDims::d2(side, side);
    spec.times = regular_times(n, 300.0);
    spec.snr = snr;
    spec.seed = seed;
    spec.curves = {
        {0.0, 60.0, 2.0},    // 0 background, no enhancement
        {3.2, 60.0, 2.0},    // 1 annulus
        {12.5, 20.0, 3.5},   // 2 outer ring, fast vascular-like wash-in/out
        {7.8, 65.0, 1.1},    // 3 core disk
        {4.2, 150.0, 1.2},   // 4 thin L-band, slow accumulation
        {3.0, 110.0, 1.5},   // 5 disconnected rectangles
        {2.8, 240.0, 1.1},   // 6 corner wedge, slow and low
        {6.4, 80.0, 2.0},    // 7 blob
        {8.8, 55.0, 1.8},    // 8 small blob
        {10.4, 40.0, 2.2},   // 9 tiny square
        {12.0, 70.0, 1.6},   // 10 plus shape
    };

    const double s = double(side) / 112.0;
    const auto sc = [s](double v) { return v * s; };
    const auto inside = [](double x, double y, double cx, double cy, double r) {
        const double dx = x - cx, dy = y - cy;
        return dx * dx + dy * dy <= r * r;
    };

    spec.labels.assign(spec.dims.voxel_count(), 0);
    for (std::uint32_t yi = 0; yi < side; ++yi) {
        for (std::uint32_t xi = 0; xi < side; ++xi) {
            const double x = double(xi), y = double(yi);
            std::int32_t label = 0;
            if (x + y >= sc(190.0)) {
                label = 6;
            } else if (inside(x, y, sc(40), sc(40), sc(8))) {
                label = 3;
            } else if (inside(x, y, sc(40), sc(40), sc(22))) {
                label = 1;
            } else if (inside(x, y, sc(40), sc(40), sc(28))) {
                label = 2;
            } else if ((y >= sc(78) && y <= sc(80) && x >= sc(8) && x <= sc(100)) ||
                       (x >= sc(8) && x <= sc(10) && y >= sc(40) && y <= sc(80))) {
                label = 4;
            } else if ((x >= sc(66) && x <= sc(94) && y >= sc(6) && y <= sc(24)) ||
                       (x >= sc(6) && x <= sc(20) && y >= sc(94) && y <= sc(106))) {
                label = 5;
            } else if (inside(x, y, sc(90), sc(56), sc(7))) {
                label = 7;
            } else if (inside(x, y, sc(60), sc(94), sc(5))) {
                label = 8;
            } else if (x >= sc(30) && x <= sc(35) && y >= sc(94) && y <= sc(99)) {
                label = 9;
            } else if ((y >= sc(67) && y <= sc(69) && x >= sc(11) && x <= sc(21)) ||
                       (x >= sc(15) && x <= sc(17) && y >= sc(62) && y <= sc(74))) {
                label = 10;
            }
            spec.labels[spec.dims.index(xi, yi)] = label;
        }
    }
    return spec;
}

std::vector<PairSeparation> separation_report(const PhantomSpec& spec, const DyadicScheme& scheme,
                                              bool singleton_sizes) {
    spec.validate();
    if (scheme.n != spec.times.size())
        throw std::invalid_argument("scheme does not match the phantom times");
    const std::uint32_t n = scheme.n;

    std::vector<std::size_t> region_size(spec.curves.size(), 0);
    for (auto l : spec.labels)
        ++region_size[std::size_t(l)];

    std::vector<PairSeparation> out;
    std::vector<double> diff(n);
    for (std::size_t a = 0; a < spec.curves.size(); ++a) {
        if (region_size[a] == 0 && !singleton_sizes)
            continue;
        for (std::size_t b = a + 1; b < spec.curves.size(); ++b) {
            if (region_size[b] == 0 && !singleton_sizes)
                continue;
            const double sa = singleton_sizes ? 1.0 : double(region_size[a]);
            const double sb = singleton_sizes ? 1.0 : double(region_size[b]);
            const double rho = std::sqrt(1.0 / sa + 1.0 / sb);
            for (std::uint32_t j = 0; j < n; ++j)
                diff[j] = spec.snr * (spec.curves[a](spec.times[j]) - spec.curves[b](spec.times[j])) / rho;
            const ScaleStats st = scale_stats(diff, scheme);
            PairSeparation sep;
            sep.label_a = std::int32_t(a);
            sep.label_b = std::int32_t(b);
            sep.per_scale = st.stat;
            sep.max_energy = *std::max_element(st.stat.begin(), st.stat.end());
            sep.delta_equivalent = std::sqrt(sep.max_energy / double(n));
            out.push_back(std::move(sep));
        }
    }
    return out;
}

}  // namespace dceseg
