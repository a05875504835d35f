#include "dceseg/model.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace dceseg {

void RawSequence::validate() const {
    dims.validate();
    if (times.size() < 4)
        throw std::invalid_argument("sequence needs at least 4 images");
    for (std::size_t j = 1; j < times.size(); ++j)
        if (!(times[j] > times[j - 1]))
            throw std::invalid_argument("acquisition times must be strictly increasing");
    if (data.size() != dims.voxel_count() * times.size())
        throw std::invalid_argument("data length does not match dims * time count");
    for (double v : data) {
        if (!std::isfinite(v))
            throw std::invalid_argument("non-finite intensity");
        if (v < 0.0)
            throw std::invalid_argument("negative intensity");
    }
}

void StabilizedSequence::validate() const {
    dims.validate();
    if (!(exponent > 0.0 && exponent < 1.0))
        throw std::invalid_argument("stabilization exponent must be in (0,1)");
    if (data.size() != dims.voxel_count() * times.size())
        throw std::invalid_argument("data length does not match dims * time count");
    if (enhanced && baseline_count == 0)
        throw std::invalid_argument("enhanced sequence must record its baseline count");
}

StabilizedSequence stabilize(const RawSequence& raw, double exponent) {
    if (!(exponent > 0.0 && exponent < 1.0))
        throw std::invalid_argument("stabilization exponent must be in (0,1)");
    raw.validate();
    StabilizedSequence out;
    out.dims = raw.dims;
    out.times = raw.times;
    out.exponent = exponent;
    out.baseline_count = 0;
    out.enhanced = false;
    out.data.resize(raw.data.size());
    const double inv_a = 1.0 / exponent;
    for (std::size_t i = 0; i < raw.data.size(); ++i)
        out.data[i] = std::pow(raw.data[i], exponent) * inv_a;
    return out;
}

StabilizedSequence remove_baseline(const StabilizedSequence& seq, std::uint32_t n0) {
    seq.validate();
    if (seq.enhanced)
        throw std::invalid_argument("baseline already removed");
    const std::uint32_t n = seq.time_count();
    if (n0 < 1 || n0 > n - 2)
        throw std::invalid_argument("baseline count must satisfy 1 <= n0 <= n-2");

    const std::uint32_t kept = n - n0;
    StabilizedSequence out;
    out.dims = seq.dims;
    out.times.assign(seq.times.begin() + n0, seq.times.end());
    out.exponent = seq.exponent;
    out.baseline_count = n0;
    out.enhanced = true;
    out.data.resize(seq.dims.voxel_count() * kept);

    const double scale = 1.0 / std::sqrt(1.0 + 1.0 / double(n0));
    for (std::size_t v = 0; v < seq.dims.voxel_count(); ++v) {
        const auto in = seq.voxel(v);
        double base = 0.0;
        for (std::uint32_t j = 0; j < n0; ++j)
            base += in[j];
        base /= double(n0);
        double* dst = out.data.data() + v * kept;
        for (std::uint32_t j = 0; j < kept; ++j)
            dst[j] = (in[n0 + j] - base) * scale;
    }
    return out;
}

ResidualField normalized_residuals(const StabilizedSequence& seq,
                                   std::span<const std::int32_t> labels) {
    seq.validate();
    const std::size_t nvox = seq.dims.voxel_count();
    const std::uint32_t n = seq.time_count();
    if (labels.size() != nvox)
        throw std::invalid_argument("partition does not cover the grid");

    std::unordered_map<std::int32_t, std::vector<std::int32_t>> members;
    for (std::size_t v = 0; v < nvox; ++v)
        members[labels[v]].push_back(std::int32_t(v));

    ResidualField out;
    out.dims = seq.dims;
    out.time_count = n;
    out.values.assign(nvox * n, 0.0);
    out.valid.assign(nvox, 0);
    out.labels.assign(labels.begin(), labels.end());

    std::vector<double> mean(n);
    for (const auto& [label, vox] : members) {
        if (vox.size() < 2) {
            out.skipped_clusters.push_back(label);
            continue;
        }
        std::fill(mean.begin(), mean.end(), 0.0);
        for (auto v : vox) {
            const auto tc = seq.voxel(std::size_t(v));
            for (std::uint32_t j = 0; j < n; ++j)
                mean[j] += tc[j];
        }
        const double inv = 1.0 / double(vox.size());
        for (std::uint32_t j = 0; j < n; ++j)
            mean[j] *= inv;
        const double scale = 1.0 / std::sqrt(1.0 - inv);
        for (auto v : vox) {
            const auto tc = seq.voxel(std::size_t(v));
            double* dst = out.values.data() + std::size_t(v) * n;
            for (std::uint32_t j = 0; j < n; ++j)
                dst[j] = (tc[j] - mean[j]) * scale;
            out.valid[std::size_t(v)] = 1;
        }
    }
    std::sort(out.skipped_clusters.begin(), out.skipped_clusters.end());
    return out;
}

}  // namespace dceseg
