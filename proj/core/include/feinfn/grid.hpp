#pragma once

#include <array>
#include <vector>

#include "feinfn/tensor.hpp"

namespace feinfn {

/// Pixel-center coordinate grid normalized to [-1,1] x [-1,1].
/// coords(i, j, :) = (-1 + (2i+1)/height, -1 + (2j+1)/width); component 0
/// runs along rows (height), component 1 along columns (width).
struct CoordinateGrid {
    i64 height = 0;
    i64 width = 0;
    Tensor coords;  // (height, width, 2)

    double pitch_row() const { return 2.0 / static_cast<double>(height); }
    double pitch_col() const { return 2.0 / static_cast<double>(width); }
};

CoordinateGrid make_coord_grid(i64 height, i64 width);

/// The 2x2 cell of LR pixel centers around a query coordinate, with the
/// diagonal-region interpolation areas. Neighbor order is row-major over the
/// cell: (i0,j0), (i0,j1), (i1,j0), (i1,j1). Border cells clamp indices
/// (entries may repeat) while areas are always computed on the unclamped
/// virtual cell, so they stay nonnegative and sum to the full cell area.
struct NeighborSet {
    std::array<std::array<i64, 2>, 4> indices;      // (row, col) into the LR grid
    std::array<std::array<double, 2>, 4> delta;     // query - neighbor center, in LR-cell units
                                                    // (one LR pixel pitch == 2 units)
    std::array<double, 4> areas;                    // partial areas S_i, sum to total_area
    double total_area = 0.0;                        // cell area S

    std::array<double, 4> normalized_areas() const {
        return {areas[0] / total_area, areas[1] / total_area,
                areas[2] / total_area, areas[3] / total_area};
    }
};

/// query = (row_coord, col_coord) in [-1,1]^2.
NeighborSet gather_neighbors(const std::array<double, 2>& query, const CoordinateGrid& lr_grid);

/// Frequency encoding of a 2-component relative coordinate:
/// [sin(2^0 d), cos(2^0 d), ..., sin(2^{L-1} d), cos(2^{L-1} d)] applied
/// elementwise, giving 4L values laid out per level as
/// [sin d0, sin d1, cos d0, cos d1].
std::vector<double> positional_encoding(const std::array<double, 2>& delta, int levels);

}  // namespace feinfn
