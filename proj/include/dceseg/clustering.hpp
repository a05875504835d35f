#pragma once

#include <cstdint>
#include <memory>
#include <queue>
#include <span>
#include <unordered_map>
#include <vector>

#include "dceseg/equivtest.hpp"
#include "dceseg/model.hpp"

namespace dceseg {

// Merge-while threshold (2 alpha / (ell (ell-1)))^(1/(max_level+1)); merging
// continues while the minimum corrected dissimilarity stays below it.
double control_threshold(std::uint64_t ell, double alpha, int max_level);

struct SegmentParams {
    double alpha = 0.001;
    double delta = 0.0;
    int connectivity = 0;          // 0 -> 4 in 2D / 6 in 3D
    bool skip_global = false;
    double exponent = 0.45;        // stabilization exponent (raw entry point)
    std::uint32_t baseline_count = 0;
};

enum class Phase : std::uint8_t { Local = 0, Global = 1 };

struct MergeRecord {
    std::uint32_t iteration;   // merges performed before this one
    Phase phase;
    std::int32_t id_a;         // id_a < id_b; ids are minimal member voxel indices
    std::int32_t id_b;
    std::int32_t new_id;       // == id_a
    double p_raw;
    double p_corrected;
    double control;            // threshold at the pre-merge cluster count
    std::uint32_t ell;         // cluster count before the merge
};

struct Segmentation {
    GridDims dims;
    std::vector<std::int32_t> labels;   // dense 0..final_count-1, decreasing size
    std::uint32_t local_count = 0;
    std::uint32_t final_count = 0;
    std::vector<std::uint32_t> cluster_sizes;
    std::vector<std::vector<double>> cluster_means;
    std::vector<MergeRecord> trace;
    SegmentParams params;
    std::uint32_t time_count = 0;
    int max_level = 0;
    double runtime_seconds = 0.0;
};

// Agglomeration over the running partition. Pairs live in a priority queue
// with lazy deletion: entries are stamped, and stale stamps are discarded at
// pop time. The local phase restricts candidate pairs to grid neighbors; the
// global phase makes every cluster pair a candidate.
class ClusterEngine {
public:
    ClusterEngine(const StabilizedSequence& seq, int connectivity,
                  const MarginSpec& margin, const DyadicScheme& scheme);
    ~ClusterEngine();

    void run_phase(double alpha);
    void start_global();

    Phase phase() const { return phase_; }
    std::uint32_t cluster_count() const { return cluster_count_; }
    std::uint32_t merges_done() const { return merges_done_; }
    const std::vector<MergeRecord>& trace() const { return trace_; }

    // Per-voxel cluster id (the minimal member voxel index).
    std::vector<std::int32_t> root_labels() const;
    std::uint32_t cluster_size(std::int32_t root) const { return size_[std::size_t(root)]; }
    std::span<const double> cluster_sum(std::int32_t root) const;

    // Full rescan over the active pair set; used to audit the stopping rule.
    struct ActiveScan {
        double min_p_corrected;
        std::int32_t a, b;
        std::size_t active_pairs;
    };
    ActiveScan scan_active() const;

private:
    struct PairStore;

    void init_pairs(int connectivity);
    void merge_pair(std::int32_t a, std::int32_t b, double control_value);
    double raw_p(std::int32_t a, std::int32_t b, std::span<double> scratch) const;

    DyadicScheme scheme_;
    MarginSpec margin_;
    GridDims dims_;
    std::uint32_t n_ = 0;

    std::vector<double> sums_;           // flat per-root running sums, |X| * n
    std::vector<std::uint32_t> size_;    // per root; 0 once absorbed
    std::vector<std::int32_t> parent_;   // union-find, root == minimal member index
    std::vector<std::vector<std::int32_t>> nbrs_;  // sorted; local phase only
    std::vector<std::int32_t> alive_;    // sorted alive roots; global phase only

    std::unique_ptr<PairStore> pairs_;

    struct HeapItem {
        double p_bar;
        std::int32_t a, b;
        std::uint64_t gen;
    };
    struct HeapGreater {
        bool operator()(const HeapItem& x, const HeapItem& y) const {
            if (x.p_bar != y.p_bar) return x.p_bar > y.p_bar;
            if (x.a != y.a) return x.a > y.a;
            return x.b > y.b;
        }
    };
    std::priority_queue<HeapItem, std::vector<HeapItem>, HeapGreater> heap_;

    std::uint64_t gen_ = 0;
    Phase phase_ = Phase::Local;
    std::uint32_t cluster_count_ = 0;
    std::uint32_t merges_done_ = 0;
    std::vector<MergeRecord> trace_;
    std::vector<double> scratch_;
};

// Full pipeline on an already-stabilized sequence.
Segmentation segment_stabilized(const StabilizedSequence& seq, const SegmentParams& params);

// Stabilize (and optionally remove the baseline), then segment.
Segmentation segment(const RawSequence& raw, const SegmentParams& params);

// Scan a tolerance grid and pick delta by the relative-slope knee rule:
// delta0 is the first grid point whose relative drop in final cluster count
// falls below `slope_threshold`, and the selection is 2*delta0. If the slope
// never falls below the threshold the scan saturates and returns the largest
// grid value with a warning flag.
struct DeltaScan {
    std::vector<double> deltas;
    std::vector<std::uint32_t> cluster_counts;
    double delta_knee = 0.0;   // delta0
    double selected = 0.0;     // 2*delta0, or the largest grid delta if saturated
    bool saturated = false;
};

DeltaScan auto_delta(const StabilizedSequence& seq, const SegmentParams& base,
                     std::span<const double> grid, double slope_threshold);

// Index of the first grid point whose relative drop (count[i]-count[i+1])/count[i]
// falls below the threshold, or SIZE_MAX when the curve never flattens.
std::size_t knee_index(std::span<const std::uint32_t> counts, double slope_threshold);

}  // namespace dceseg
