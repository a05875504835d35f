#include "dceseg/clustering.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "parallel.hpp"

namespace dceseg {

double control_threshold(std::uint64_t ell, double alpha, int max_level) {
    if (ell < 2)
        throw std::invalid_argument("control threshold needs at least 2 clusters");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must be in (0,1)");
    const double log_c = (std::log(2.0 * alpha) - std::log(double(ell)) - std::log(double(ell - 1))) /
                         double(max_level + 1);
    return std::exp(log_c);
}

// ---------------------------------------------------------------------------
// Pair store: sparse hash map while candidates are grid neighbors, dense
// triangular array once every cluster pair is a candidate.
// ---------------------------------------------------------------------------

namespace {
inline std::uint64_t pair_key(std::int32_t a, std::int32_t b) {
    return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}
}  // namespace

struct ClusterEngine::PairStore {
    struct Entry {
        double p_raw = 0.0;
        double p_bar = 0.0;
        std::uint64_t gen = 0;  // 0 == absent (dense mode)
    };

    bool dense = false;
    std::unordered_map<std::uint64_t, Entry> map;
    std::vector<std::int32_t> compact;      // voxel id -> dense slot
    std::vector<std::int32_t> slot_ids;     // dense slot -> voxel id
    std::vector<Entry> flat;                // lower-triangular, i<j slots

    std::size_t tri_index(std::int32_t a, std::int32_t b) const {
        const std::size_t i = std::size_t(compact[std::size_t(a)]);
        const std::size_t j = std::size_t(compact[std::size_t(b)]);
        const auto [lo, hi] = std::minmax(i, j);
        return hi * (hi - 1) / 2 + lo;
    }

    Entry* find(std::int32_t a, std::int32_t b) {
        if (!dense) {
            auto it = map.find(pair_key(a, b));
            return it == map.end() ? nullptr : &it->second;
        }
        Entry& e = flat[tri_index(a, b)];
        return e.gen == 0 ? nullptr : &e;
    }
    const Entry* find(std::int32_t a, std::int32_t b) const {
        return const_cast<PairStore*>(this)->find(a, b);
    }

    Entry& upsert(std::int32_t a, std::int32_t b) {
        if (!dense)
            return map[pair_key(a, b)];
        return flat[tri_index(a, b)];
    }

    void erase(std::int32_t a, std::int32_t b) {
        if (!dense) {
            map.erase(pair_key(a, b));
            return;
        }
        flat[tri_index(a, b)].gen = 0;
    }

    void to_dense(const std::vector<std::int32_t>& alive, std::size_t nvox) {
        compact.assign(nvox, -1);
        slot_ids = alive;
        for (std::size_t s = 0; s < alive.size(); ++s)
            compact[std::size_t(alive[s])] = std::int32_t(s);
        flat.assign(alive.size() * (alive.size() - 1) / 2, Entry{});
        dense = true;
        for (const auto& [key, entry] : map) {
            const auto a = std::int32_t(key >> 32);
            const auto b = std::int32_t(key & 0xffffffffu);
            flat[tri_index(a, b)] = entry;
        }
        map.clear();
    }

    template <class Fn>
    void for_each(Fn&& fn) const {
        if (!dense) {
            for (const auto& [key, entry] : map)
                fn(std::int32_t(key >> 32), std::int32_t(key & 0xffffffffu), entry);
            return;
        }
        for (std::size_t j = 1; j < slot_ids.size(); ++j)
            for (std::size_t i = 0; i < j; ++i) {
                const Entry& e = flat[j * (j - 1) / 2 + i];
                if (e.gen != 0) {
                    const auto a = slot_ids[i], b = slot_ids[j];
                    fn(std::min(a, b), std::max(a, b), e);
                }
            }
    }
};

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

ClusterEngine::ClusterEngine(const StabilizedSequence& seq, int connectivity,
                             const MarginSpec& margin, const DyadicScheme& scheme)
    : scheme_(scheme), margin_(margin), dims_(seq.dims), n_(seq.time_count()) {
    seq.validate();
    if (scheme_.n != n_)
        throw std::invalid_argument("scheme does not match the sequence length");
    if (margin_.n != n_)
        throw std::invalid_argument("margin does not match the sequence length");
    if (!(margin_.delta >= 0.0))
        throw std::invalid_argument("delta must be nonnegative");

    const std::size_t nvox = dims_.voxel_count();
    if (nvox > std::size_t(INT32_MAX))
        throw std::invalid_argument("grid too large");

    sums_ = seq.data;
    size_.assign(nvox, 1);
    parent_.resize(nvox);
    for (std::size_t v = 0; v < nvox; ++v)
        parent_[v] = std::int32_t(v);
    cluster_count_ = std::uint32_t(nvox);
    scratch_.resize(scheme_.block_count(scheme_.max_level) + std::size_t(scheme_.max_level) + 1);
    pairs_ = std::make_unique<PairStore>();

    init_pairs(connectivity == 0 ? default_connectivity(dims_) : connectivity);
}

ClusterEngine::~ClusterEngine() = default;

std::span<const double> ClusterEngine::cluster_sum(std::int32_t root) const {
    return {sums_.data() + std::size_t(root) * n_, n_};
}

double ClusterEngine::raw_p(std::int32_t a, std::int32_t b, std::span<double> scratch) const {
    return pair_pvalue_max(cluster_sum(a), size_[std::size_t(a)],
                           cluster_sum(b), size_[std::size_t(b)],
                           scheme_, margin_, scratch);
}

void ClusterEngine::init_pairs(int connectivity) {
    const auto edges = grid_edges(dims_, connectivity);
    nbrs_.resize(dims_.voxel_count());
    for (const auto& [a, b] : edges) {
        nbrs_[std::size_t(a)].push_back(b);
        nbrs_[std::size_t(b)].push_back(a);
    }
    for (auto& v : nbrs_)
        std::sort(v.begin(), v.end());

    std::vector<double> pvals(edges.size());
    const unsigned workers = detail::worker_count();
    std::vector<std::vector<double>> scratch(workers, scratch_);
    detail::parallel_for(edges.size(), [&](std::size_t i, unsigned w) {
        pvals[i] = raw_p(edges[i].first, edges[i].second, scratch[w]);
    });

    std::vector<HeapItem> items;
    items.reserve(edges.size());
    pairs_->map.reserve(edges.size() * 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto [a, b] = edges[i];
        auto& e = pairs_->upsert(a, b);
        e.p_raw = pvals[i];
        e.p_bar = pvals[i];
        e.gen = ++gen_;
        items.push_back({e.p_bar, a, b, e.gen});
    }
    heap_ = decltype(heap_)(HeapGreater{}, std::move(items));
}

void ClusterEngine::run_phase(double alpha) {
    while (cluster_count_ >= 2) {
        const PairStore::Entry* entry = nullptr;
        while (!heap_.empty()) {
            const HeapItem& h = heap_.top();
            entry = pairs_->find(h.a, h.b);
            if (entry == nullptr || entry->gen != h.gen) {
                entry = nullptr;
                heap_.pop();
                continue;
            }
            break;
        }
        if (entry == nullptr)
            break;
        const double c = control_threshold(cluster_count_, alpha, scheme_.max_level);
        const HeapItem h = heap_.top();
        if (!(h.p_bar < c))
            break;
        heap_.pop();
        merge_pair(h.a, h.b, c);
    }
}

void ClusterEngine::merge_pair(std::int32_t a, std::int32_t b, double control_value) {
    const PairStore::Entry merged = *pairs_->find(a, b);
    trace_.push_back({merges_done_, phase_, a, b, a, merged.p_raw, merged.p_bar,
                      control_value, cluster_count_});

    // Candidate partners of the merged cluster.
    std::vector<std::int32_t> partners;
    if (phase_ == Phase::Local) {
        const auto& na = nbrs_[std::size_t(a)];
        const auto& nb = nbrs_[std::size_t(b)];
        partners.reserve(na.size() + nb.size());
        std::set_union(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(partners));
        std::erase(partners, a);
        std::erase(partners, b);
    } else {
        partners.reserve(alive_.size());
        for (auto v : alive_)
            if (v != a && v != b)
                partners.push_back(v);
    }

    // Corrected dissimilarity of the pair (merged, c) depends on whether c
    // was a candidate of one side or of both; snapshot before mutating.
    struct Old {
        bool has_a = false, has_b = false;
        double pa = 0.0, pb = 0.0;
    };
    std::vector<Old> old(partners.size());
    for (std::size_t i = 0; i < partners.size(); ++i) {
        if (const auto* e = pairs_->find(std::min(a, partners[i]), std::max(a, partners[i]))) {
            old[i].has_a = true;
            old[i].pa = e->p_bar;
        }
        if (const auto* e = pairs_->find(std::min(b, partners[i]), std::max(b, partners[i]))) {
            old[i].has_b = true;
            old[i].pb = e->p_bar;
            pairs_->erase(std::min(b, partners[i]), std::max(b, partners[i]));
        }
    }
    pairs_->erase(a, b);

    // Data merge: b is absorbed into a (a < b, so ids stay minimal members).
    double* sa = sums_.data() + std::size_t(a) * n_;
    const double* sb = sums_.data() + std::size_t(b) * n_;
    for (std::uint32_t j = 0; j < n_; ++j)
        sa[j] += sb[j];
    size_[std::size_t(a)] += size_[std::size_t(b)];
    size_[std::size_t(b)] = 0;
    parent_[std::size_t(b)] = a;
    --cluster_count_;
    ++merges_done_;

    if (phase_ == Phase::Local) {
        nbrs_[std::size_t(a)] = partners;
        nbrs_[std::size_t(b)].clear();
        nbrs_[std::size_t(b)].shrink_to_fit();
        for (auto c : partners) {
            auto& nc = nbrs_[std::size_t(c)];
            if (auto it = std::lower_bound(nc.begin(), nc.end(), b); it != nc.end() && *it == b)
                nc.erase(it);
            if (auto it = std::lower_bound(nc.begin(), nc.end(), a); it == nc.end() || *it != a)
                nc.insert(it, a);
        }
    } else {
        if (auto it = std::lower_bound(alive_.begin(), alive_.end(), b);
            it != alive_.end() && *it == b)
            alive_.erase(it);
    }

    for (std::size_t i = 0; i < partners.size(); ++i) {
        const auto c = partners[i];
        const double p = raw_p(a, c, scratch_);
        double p_bar;
        if (old[i].has_a && !old[i].has_b)
            p_bar = std::max(old[i].pa, p);
        else if (!old[i].has_a && old[i].has_b)
            p_bar = std::max(old[i].pb, p);
        else
            p_bar = std::max(std::min(old[i].pa, old[i].pb), p);
        auto& e = pairs_->upsert(std::min(a, c), std::max(a, c));
        e.p_raw = p;
        e.p_bar = p_bar;
        e.gen = ++gen_;
        heap_.push({p_bar, std::min(a, c), std::max(a, c), e.gen});
    }
}

void ClusterEngine::start_global() {
    if (phase_ == Phase::Global)
        throw std::logic_error("global phase already started");
    phase_ = Phase::Global;

    alive_.clear();
    for (std::size_t v = 0; v < parent_.size(); ++v)
        if (parent_[v] == std::int32_t(v))
            alive_.push_back(std::int32_t(v));

    nbrs_.clear();
    nbrs_.shrink_to_fit();
    if (alive_.size() < 2)
        return;

    // Former neighbor pairs keep their corrected values (and stay valid in
    // the queue); every other pair enters at its raw p-value.
    pairs_->to_dense(alive_, parent_.size());

    std::vector<std::pair<std::int32_t, std::int32_t>> fresh;
    fresh.reserve(alive_.size() * (alive_.size() - 1) / 2);
    for (std::size_t j = 1; j < alive_.size(); ++j)
        for (std::size_t i = 0; i < j; ++i)
            if (pairs_->find(alive_[i], alive_[j]) == nullptr)
                fresh.emplace_back(alive_[i], alive_[j]);

    std::vector<double> pvals(fresh.size());
    const unsigned workers = detail::worker_count();
    std::vector<std::vector<double>> scratch(workers, scratch_);
    detail::parallel_for(fresh.size(), [&](std::size_t i, unsigned w) {
        pvals[i] = raw_p(fresh[i].first, fresh[i].second, scratch[w]);
    });

    for (std::size_t i = 0; i < fresh.size(); ++i) {
        const auto [x, y] = fresh[i];
        auto& e = pairs_->upsert(x, y);
        e.p_raw = pvals[i];
        e.p_bar = pvals[i];
        e.gen = ++gen_;
        heap_.push({e.p_bar, x, y, e.gen});
    }
}

std::vector<std::int32_t> ClusterEngine::root_labels() const {
    // parent_[v] < v for absorbed clusters, so one ascending pass resolves
    // every chain.
    std::vector<std::int32_t> roots(parent_.size());
    for (std::size_t v = 0; v < parent_.size(); ++v)
        roots[v] = (parent_[v] == std::int32_t(v)) ? std::int32_t(v)
                                                   : roots[std::size_t(parent_[v])];
    return roots;
}

ClusterEngine::ActiveScan ClusterEngine::scan_active() const {
    ActiveScan s{2.0, -1, -1, 0};
    pairs_->for_each([&](std::int32_t a, std::int32_t b, const PairStore::Entry& e) {
        ++s.active_pairs;
        if (e.p_bar < s.min_p_corrected ||
            (e.p_bar == s.min_p_corrected && (a < s.a || (a == s.a && b < s.b)))) {
            s.min_p_corrected = e.p_bar;
            s.a = a;
            s.b = b;
        }
    });
    return s;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

Segmentation segment_stabilized(const StabilizedSequence& seq, const SegmentParams& params) {
    const auto t0 = std::chrono::steady_clock::now();
    seq.validate();
    if (!(params.alpha > 0.0 && params.alpha < 1.0))
        throw std::invalid_argument("alpha must be in (0,1)");
    if (!(params.delta >= 0.0))
        throw std::invalid_argument("delta must be nonnegative");

    const DyadicScheme scheme = build_scheme(seq.time_count());
    const int connectivity =
        params.connectivity == 0 ? default_connectivity(seq.dims) : params.connectivity;
    const MarginSpec margin{params.delta, seq.time_count()};

    ClusterEngine engine(seq, connectivity, margin, scheme);
    engine.run_phase(params.alpha);
    const std::uint32_t local_count = engine.cluster_count();
    if (!params.skip_global && local_count > 1) {
        engine.start_global();
        engine.run_phase(params.alpha);
    }

    Segmentation out;
    out.dims = seq.dims;
    out.local_count = local_count;
    out.final_count = engine.cluster_count();
    out.trace = engine.trace();
    out.params = params;
    out.params.connectivity = connectivity;
    out.time_count = seq.time_count();
    out.max_level = scheme.max_level;

    // Dense labels ordered by decreasing size (ties: smaller id first).
    const auto roots = engine.root_labels();
    std::vector<std::int32_t> uniq;
    for (std::size_t v = 0; v < roots.size(); ++v)
        if (roots[v] == std::int32_t(v))
            uniq.push_back(roots[v]);
    std::sort(uniq.begin(), uniq.end(), [&](std::int32_t x, std::int32_t y) {
        const auto sx = engine.cluster_size(x), sy = engine.cluster_size(y);
        return sx != sy ? sx > sy : x < y;
    });
    std::vector<std::int32_t> dense(roots.size(), -1);
    out.cluster_sizes.reserve(uniq.size());
    out.cluster_means.reserve(uniq.size());
    for (std::size_t k = 0; k < uniq.size(); ++k) {
        dense[std::size_t(uniq[k])] = std::int32_t(k);
        const auto sz = engine.cluster_size(uniq[k]);
        out.cluster_sizes.push_back(sz);
        const auto sum = engine.cluster_sum(uniq[k]);
        std::vector<double> mean(sum.begin(), sum.end());
        for (auto& m : mean)
            m /= double(sz);
        out.cluster_means.push_back(std::move(mean));
    }
    out.labels.resize(roots.size());
    for (std::size_t v = 0; v < roots.size(); ++v)
        out.labels[v] = dense[std::size_t(roots[v])];

    out.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

Segmentation segment(const RawSequence& raw, const SegmentParams& params) {
    StabilizedSequence st = stabilize(raw, params.exponent);
    if (params.baseline_count > 0)
        st = remove_baseline(st, params.baseline_count);
    return segment_stabilized(st, params);
}

DeltaScan auto_delta(const StabilizedSequence& seq, const SegmentParams& base,
                     std::span<const double> grid, double slope_threshold) {
    if (grid.size() < 3)
        throw std::invalid_argument("auto_delta needs at least 3 grid points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument("auto_delta grid must be increasing");
    if (!(slope_threshold > 0.0 && slope_threshold < 1.0))
        throw std::invalid_argument("slope threshold must be in (0,1)");

    DeltaScan scan;
    scan.deltas.assign(grid.begin(), grid.end());
    scan.cluster_counts.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        SegmentParams p = base;
        p.delta = grid[i];
        scan.cluster_counts[i] = segment_stabilized(seq, p).final_count;
    }

    const std::size_t knee = knee_index(scan.cluster_counts, slope_threshold);
    if (knee == SIZE_MAX) {
        scan.saturated = true;
        scan.delta_knee = grid.back();
        scan.selected = grid.back();
    } else {
        scan.saturated = false;
        scan.delta_knee = grid[knee];
        scan.selected = 2.0 * grid[knee];
    }
    return scan;
}

std::size_t knee_index(std::span<const std::uint32_t> counts, double slope_threshold) {
    for (std::size_t i = 0; i + 1 < counts.size(); ++i) {
        const double before = double(counts[i]);
        const double slope = (before - double(counts[i + 1])) / before;
        if (slope < slope_threshold)
            return i;
    }
    return SIZE_MAX;
}

}  // namespace dceseg
