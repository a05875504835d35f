#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dceseg/clustering.hpp"
#include "dceseg/eval.hpp"
#include "dceseg/grid.hpp"

namespace dceseg {

// Malformed input file; `offset` is the byte position of the defect.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what), offset_(offset) {}
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

// DCES v1, little-endian: magic "DCES", version byte 1, ndims byte in {2,3},
// ndims u32 extents (x fastest-varying), u32 time count n, n f64 times, then
// n frames of voxel_count f32 intensities in row-major voxel order.
struct DcesData {
    GridDims dims;
    std::vector<double> times;
    std::vector<double> data;  // voxel-major in memory: data[v*n + j]
};

void write_dces(const std::string& path, const GridDims& dims,
                std::span<const double> times, std::span<const double> voxel_major_data);
DcesData read_dces(const std::string& path);

// Label maps: ASCII PGM (P2) with maxval = label count - 1 (clamped to >= 1
// so single-cluster maps stay readable) for 2D grids; "x y z label" text
// lines under a header for 3D grids.
void write_label_map(const std::string& path, const LabelMap& map);
LabelMap read_label_map(const std::string& path);

// Binary mask as PGM P2 with values {0,1}.
void write_mask_pgm(const std::string& path, const GridDims& dims,
                    std::span<const std::uint8_t> mask);

// Merge trace CSV, columns:
// iteration,phase,id_a,id_b,new_id,p_raw,p_corrected,control,ell
void write_trace_csv(const std::string& path, std::span<const MergeRecord> trace);

// Per-cluster average curves: label,size,I(t_1..t_n) one row per cluster.
void write_means_csv(const std::string& path, const Segmentation& seg,
                     std::span<const double> times);

// Whole-file atomic write: temp file in the same directory, then rename.
void atomic_write(const std::string& path, const std::string& contents);

}  // namespace dceseg
