#include "dceseg/grid.hpp"

namespace dceseg {

std::vector<std::array<int, 3>> forward_neighbor_offsets(const GridDims& dims, int connectivity) {
    if (dims.ndims == 2) {
        if (connectivity == 4)
            return {{1, 0, 0}, {0, 1, 0}};
        if (connectivity == 8)
            return {{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, -1, 0}};
        throw std::invalid_argument("2D connectivity must be 4 or 8, got " + std::to_string(connectivity));
    }
    if (connectivity == 6)
        return {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    if (connectivity == 26) {
        // 13 forward offsets: lexicographically positive (dz,dy,dx) triples.
        std::vector<std::array<int, 3>> offs;
        for (int dz = 0; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dz == 0 && (dy < 0 || (dy == 0 && dx <= 0)))
                        continue;
                    offs.push_back({dx, dy, dz});
                }
        return offs;
    }
    throw std::invalid_argument("3D connectivity must be 6 or 26, got " + std::to_string(connectivity));
}

int default_connectivity(const GridDims& dims) {
    return dims.ndims == 2 ? 4 : 6;
}

std::vector<std::pair<std::int32_t, std::int32_t>> grid_edges(const GridDims& dims, int connectivity) {
    dims.validate();
    const auto offs = forward_neighbor_offsets(dims, connectivity);
    const int nx = int(dims.extent[0]), ny = int(dims.extent[1]), nz = int(dims.extent[2]);
    std::vector<std::pair<std::int32_t, std::int32_t>> edges;
    edges.reserve(dims.voxel_count() * offs.size());
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const auto a = std::int32_t(dims.index(x, y, z));
                for (const auto& o : offs) {
                    const int xn = x + o[0], yn = y + o[1], zn = z + o[2];
                    if (xn < 0 || xn >= nx || yn < 0 || yn >= ny || zn < 0 || zn >= nz)
                        continue;
                    const auto b = std::int32_t(dims.index(xn, yn, zn));
                    edges.emplace_back(std::min(a, b), std::max(a, b));
                }
            }
    return edges;
}

}  // namespace dceseg
