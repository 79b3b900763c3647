#include "feinfn/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace feinfn {

CoordinateGrid make_coord_grid(i64 height, i64 width) {
    if (height < 1 || width < 1)
        throw std::invalid_argument("make_coord_grid: dimensions must be positive");
    CoordinateGrid g;
    g.height = height;
    g.width = width;
    g.coords = Tensor::zeros({height, width, 2});
    double* p = g.coords.data();
    for (i64 i = 0; i < height; ++i) {
        double r = -1.0 + (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(height);
        for (i64 j = 0; j < width; ++j) {
            double c = -1.0 + (2.0 * static_cast<double>(j) + 1.0) / static_cast<double>(width);
            *p++ = r;
            *p++ = c;
        }
    }
    return g;
}

namespace {

struct AxisCell {
    i64 lo, hi;        // clamped indices
    double t;          // fractional position in the virtual cell, [0,1)
    double center_lo;  // clamped center coordinates (used for deltas)
    double center_hi;
};

AxisCell axis_cell(double q, i64 n) {
    double pitch = 2.0 / static_cast<double>(n);
    double first = -1.0 + pitch / 2.0;
    double f = std::floor((q - first) / pitch);
    i64 i0 = static_cast<i64>(f);
    double t = (q - (first + f * pitch)) / pitch;
    AxisCell c;
    c.lo = std::clamp<i64>(i0, 0, n - 1);
    c.hi = std::clamp<i64>(i0 + 1, 0, n - 1);
    c.t = t;
    c.center_lo = first + static_cast<double>(c.lo) * pitch;
    c.center_hi = first + static_cast<double>(c.hi) * pitch;
    return c;
}

}  // namespace

NeighborSet gather_neighbors(const std::array<double, 2>& query, const CoordinateGrid& lr_grid) {
    if (query[0] < -1.0 || query[0] > 1.0 || query[1] < -1.0 || query[1] > 1.0)
        throw std::invalid_argument("gather_neighbors: query outside [-1,1]^2");

    AxisCell rc = axis_cell(query[0], lr_grid.height);
    AxisCell cc = axis_cell(query[1], lr_grid.width);

    double pr = lr_grid.pitch_row();
    double pc = lr_grid.pitch_col();
    double cell_area = pr * pc;

    // Diagonal-region weights: the corner at (lo,lo) owns the rectangle
    // between the query and the opposite corner (hi,hi), and so on.
    double wr[2] = {1.0 - rc.t, rc.t};
    double wc[2] = {1.0 - cc.t, cc.t};

    NeighborSet out;
    out.total_area = cell_area;
    const i64 ridx[2] = {rc.lo, rc.hi};
    const i64 cidx[2] = {cc.lo, cc.hi};
    const double rcen[2] = {rc.center_lo, rc.center_hi};
    const double ccen[2] = {cc.center_lo, cc.center_hi};
    int k = 0;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            out.indices[k] = {ridx[a], cidx[b]};
            // Relative coordinates in LR-cell units: one pitch maps to 2.
            out.delta[k] = {(query[0] - rcen[a]) * static_cast<double>(lr_grid.height),
                            (query[1] - ccen[b]) * static_cast<double>(lr_grid.width)};
            out.areas[k] = wr[a] * wc[b] * cell_area;
            ++k;
        }
    }
    return out;
}

std::vector<double> positional_encoding(const std::array<double, 2>& delta, int levels) {
    if (levels < 1) throw std::invalid_argument("positional_encoding: levels must be >= 1");
    std::vector<double> out;
    out.reserve(static_cast<size_t>(4 * levels));
    double scale = 1.0;
    for (int l = 0; l < levels; ++l) {
        out.push_back(std::sin(scale * delta[0]));
        out.push_back(std::sin(scale * delta[1]));
        out.push_back(std::cos(scale * delta[0]));
        out.push_back(std::cos(scale * delta[1]));
        scale *= 2.0;
    }
    return out;
}

}  // namespace feinfn
