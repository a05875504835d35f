#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dceseg {

// Spatial extents of a 2D or 3D voxel grid. Linear voxel index runs with x
// fastest: v = x + nx*(y + ny*z).
struct GridDims {
    std::array<std::uint32_t, 3> extent{1, 1, 1};
    int ndims = 2;

    static GridDims d2(std::uint32_t nx, std::uint32_t ny) {
        GridDims d;
        d.extent = {nx, ny, 1};
        d.ndims = 2;
        return d;
    }
    static GridDims d3(std::uint32_t nx, std::uint32_t ny, std::uint32_t nz) {
        GridDims d;
        d.extent = {nx, ny, nz};
        d.ndims = 3;
        return d;
    }

    std::size_t voxel_count() const {
        return std::size_t(extent[0]) * extent[1] * extent[2];
    }

    std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z = 0) const {
        return x + std::size_t(extent[0]) * (y + std::size_t(extent[1]) * z);
    }

    bool operator==(const GridDims& o) const {
        return ndims == o.ndims && extent == o.extent;
    }

    void validate() const {
        if (ndims != 2 && ndims != 3)
            throw std::invalid_argument("grid must be 2D or 3D");
        for (int i = 0; i < ndims; ++i)
            if (extent[i] == 0)
                throw std::invalid_argument("grid extent must be positive");
        if (ndims == 2 && extent[2] != 1)
            throw std::invalid_argument("2D grid must have unit z extent");
    }
};

// Forward half-space neighbor offsets so each undirected grid edge is
// enumerated exactly once. Connectivity: 4 or 8 in 2D, 6 or 26 in 3D.
std::vector<std::array<int, 3>> forward_neighbor_offsets(const GridDims& dims, int connectivity);

// Default connectivity for a grid: 4 in 2D, 6 in 3D.
int default_connectivity(const GridDims& dims);

// All undirected grid-adjacent voxel pairs (a < b).
std::vector<std::pair<std::int32_t, std::int32_t>> grid_edges(const GridDims& dims, int connectivity);

}  // namespace dceseg
