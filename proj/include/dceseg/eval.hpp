#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dceseg/grid.hpp"

namespace dceseg {

// Dense per-voxel labeling, labels contiguous from 0.
struct LabelMap {
    GridDims dims;
    std::vector<std::int32_t> labels;

    std::int32_t label_count() const;
    void validate() const;
};

struct IndexValue {
    double value = 0.0;
    bool degenerate = false;  // zero denominator (no co-clustered pair anywhere)
};

// Fowlkes-Mallows index via pair-count algebra on the contingency table.
IndexValue fm_index(const LabelMap& p, const LabelMap& q);

// Size-weighted variant: a pair (x1,x2) counts w1*w2 with w_i = |X|/|C_i|,
// cluster sizes taken from the FIRST partition. Not symmetric in general.
IndexValue weighted_fm(const LabelMap& p, const LabelMap& q);

// Voxels outside the mutually best-matching clusters: marks C_i \ D_{j(i)}
// and D_j \ C_{i(j)} where the match maximizes overlap (ties -> smallest
// label).
std::vector<std::uint8_t> error_map(const LabelMap& p, const LabelMap& q);

// True when the partitions are identical up to label renaming.
bool same_partition(const LabelMap& p, const LabelMap& q);

}  // namespace dceseg
