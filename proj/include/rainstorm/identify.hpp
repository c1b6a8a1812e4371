// Rainstorm identification at a single timestep: contiguous precipitating
// regions, almost-connected-component labeling, and the four-stage
// large/small procedure that avoids the chaining effect.
#pragma once

#include <cstdint>
#include <vector>

#include "rainstorm/grid.hpp"

namespace rainstorm {

struct Cell {
    int x = 0;
    int y = 0;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline int64_t cell_key(int x, int y) {
    return (int64_t(y) << 32) | uint32_t(x);
}
inline int64_t cell_key(const Cell& c) { return cell_key(c.x, c.y); }

// One contiguous precipitating region: cells sorted row-major (y, then x),
// with matching per-cell depths (mm/step).
struct Region {
    std::vector<Cell> cells;
    std::vector<float> values;

    int cell_count() const { return static_cast<int>(cells.size()); }
    double total_mm() const;
};

// A rainstorm segment: one or more regions grouped at one timestep.
struct Segment {
    int id = 0;
    int t = 0;
    std::vector<Region> regions;

    int cell_count() const;
    double total_mm() const;
    // Precipitation-weighted centroid in fractional cell-index coordinates.
    std::pair<double, double> centroid_xy() const;
};

struct IdentParams {
    double wet_threshold_mm_per_step = 0.1;
    int connectivity = 8;  // 4 or 8
    double dilation_radius_km = 24.0;
    // Regions covering at least this many cells are "large". 0 derives the
    // count from large_region_min_km2 and the cell area.
    int large_region_min_cells = 0;
    double large_region_min_km2 = 1000.0;
    double small_attach_max_km = 48.0;

    int resolved_large_min_cells(const GridGeometry& geom) const;
    void validate() const;
};

// Shortest edge-to-edge distance (km) between two cells: zero for adjacent
// or identical cells, grid gaps otherwise.
inline double cell_gap_km(const Cell& a, const Cell& b, const GridGeometry& geom) {
    const double gx = std::max(0, std::abs(a.x - b.x) - 1) * geom.dx_km;
    const double gy = std::max(0, std::abs(a.y - b.y) - 1) * geom.dy_km;
    return std::hypot(gx, gy);
}

double region_gap_km(const Region& a, const Region& b, const GridGeometry& geom);

// Stage 1: maximal connected sets of cells with value > wet_threshold,
// under 4- or 8-connectivity. Deterministic: regions ordered by their first
// row-major cell.
std::vector<Region> connected_regions(const Eigen::ArrayXXf& slice, const MaskArray& mask,
                                      const IdentParams& params);

// Group regions that would touch after dilating each by radius_km, i.e.
// whose edge-to-edge distance is at most 2*radius_km (transitively).
std::vector<Segment> almost_connected_label(const std::vector<Region>& regions, double radius_km,
                                            const GridGeometry& geom, int t = 0);

// Full four-stage procedure: (1) contiguous regions, (2) almost-connected
// labeling over large regions only, (3) small regions attach to the nearest
// stage-2 segment within small_attach_max_km, (4) leftover small regions
// cluster among themselves. Output covers every wet cell exactly once.
std::vector<Segment> identify_segments(const Eigen::ArrayXXf& slice, const MaskArray& mask,
                                       const IdentParams& params, const GridGeometry& geom,
                                       int t = 0);

// identify_segments over every timestep; parallel across timesteps.
std::vector<std::vector<Segment>> identify_all(const GridField& field, const IdentParams& params,
                                               int threads = 1);

}  // namespace rainstorm
