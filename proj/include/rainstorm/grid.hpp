// Gridded precipitation fields: geometry, domain mask, PGRID file I/O,
// intensity cutoff, and cumulative intensity diagnostics.
#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "rainstorm/geo.hpp"

namespace rainstorm {

using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Constant-spacing grid on a locally flat patch. Cell (0,0) center sits at
// (lat0, lon0); x advances east, y advances north.
struct GridGeometry {
    int nx = 0;
    int ny = 0;
    double dx_km = 12.0;
    double dy_km = 12.0;
    double dt_hours = 3.0;
    double lat0 = 0.0;
    double lon0 = 0.0;

    double cell_area_km2() const { return dx_km * dy_km; }

    // Longitude scaling follows each row's own parallel, so x-spacing is
    // dx_km at every latitude of the grid.
    LatLon cell_latlon(double ix, double iy) const {
        const double lat = lat0 + iy * dy_km / kKmPerDegree;
        const double lon = lon0 + ix * dx_km / (kKmPerDegree * std::cos(deg2rad(lat)));
        return {lat, lon};
    }

    // Inverse of cell_latlon, rounded to the nearest cell; not clamped.
    std::pair<int, int> nearest_cell(const LatLon& p) const {
        const double iy = (p.lat - lat0) * kKmPerDegree / dy_km;
        const double ix = (p.lon - lon0) * kKmPerDegree * std::cos(deg2rad(p.lat)) / dx_km;
        return {static_cast<int>(std::llround(ix)), static_cast<int>(std::llround(iy))};
    }

    bool contains(int ix, int iy) const { return ix >= 0 && ix < nx && iy >= 0 && iy < ny; }

    void validate() const;

    bool operator==(const GridGeometry&) const = default;
};

// Precipitation depth per timestep (mm/step), one ny-by-nx slice per step.
// Cells outside the domain mask are held at zero in memory and written as
// NaN in files; no statistic ever counts them.
struct GridField {
    GridGeometry geom;
    std::vector<Eigen::ArrayXXf> steps;
    MaskArray mask;

    int nt() const { return static_cast<int>(steps.size()); }

    static GridField zeros(const GridGeometry& geom, int nt);
    static GridField zeros_like(const GridField& other);

    double total_mm() const;  // sum of all in-mask values
    void validate() const;
};

// Mass-weighted cumulative distribution of precipitation vs. intensity.
struct IntensityCurve {
    std::vector<double> thresholds;           // mm/hour, ascending
    std::vector<double> cumulative_fraction;  // in [0,1], nondecreasing, ends at 1
};

// PGRID container: ASCII header (magic PGRD1, key=value lines, END), then
// nt*ny*nx little-endian float32 in [t][y][x] row-major order. NaN marks
// cells outside the domain. PGRT1 is the whitespace-separated text variant.
GridField load_field(const std::filesystem::path& path);
void save_field(const GridField& field, const std::filesystem::path& path, bool binary = true);

// Canonical global intensity cutoff: 0.1 mm per 3-hour step; excludes at
// most ~2% of total precipitation on typical inputs.
inline constexpr double kDefaultCutoffMmPerHour = 0.033;

// Zero every cell whose intensity (value/dt_hours) falls below the cutoff.
GridField apply_cutoff(const GridField& field, double cutoff_mm_per_hour);

IntensityCurve intensity_curve(const GridField& field);

// Largest threshold whose cumulative fraction does not exceed
// excluded_fraction, so that apply_cutoff at the result removes at most
// that share of total precipitation. Returns 0 when no threshold qualifies.
double cutoff_for_excluded_fraction(const IntensityCurve& curve, double excluded_fraction);

}  // namespace rainstorm
