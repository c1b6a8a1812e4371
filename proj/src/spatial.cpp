#include "rainstorm/spatial.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "rainstorm/parallel.hpp"

namespace rainstorm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct DomainCells {
    std::vector<int> xs, ys;
    std::vector<LatLon> latlons;
};

DomainCells domain_cells(const GridGeometry& geom, const MaskArray& mask) {
    DomainCells d;
    for (int y = 0; y < geom.ny; ++y) {
        for (int x = 0; x < geom.nx; ++x) {
            if (!mask(y, x)) continue;
            d.xs.push_back(x);
            d.ys.push_back(y);
            d.latlons.push_back(geom.cell_latlon(x, y));
        }
    }
    if (d.xs.empty()) throw std::invalid_argument("kernel map: empty domain mask");
    return d;
}

// Row-normalized Gaussian weights of one source point over the domain.
// wrow[j] = k(src, cell_j), with sum_j wrow[j] = 1.
void kernel_row(const LatLon& src, const DomainCells& cells, double bandwidth_km,
                std::vector<double>& wrow) {
    const double inv2h2 = 1.0 / (2.0 * bandwidth_km * bandwidth_km);
    wrow.resize(cells.latlons.size());
    double z = 0.0;
    for (size_t j = 0; j < cells.latlons.size(); ++j) {
        const double d = great_circle_km(src, cells.latlons[j]);
        wrow[j] = std::exp(-d * d * inv2h2);
        z += wrow[j];
    }
    for (double& w : wrow) w /= z;
}

// Weighted per-source points of each event under the chosen attribution.
struct SourcePoint {
    LatLon loc;
    double metric = 0.0;
};

std::vector<SourcePoint> source_points(const std::vector<StormMetrics>& metrics,
                                       EventMetric which, const GridGeometry& geom,
                                       MapAttribution attribution) {
    std::vector<SourcePoint> pts;
    for (const StormMetrics& m : metrics) {
        double value = 0.0;
        if (which == EventMetric::kMeanSizeKm2) {
            double s = 0.0;
            for (int c : m.size_cells) s += c;
            value = geom.cell_area_km2() * s / static_cast<double>(m.l_steps);
        } else {
            value = m.duration_hours;
        }
        if (attribution == MapAttribution::kInitiation) {
            pts.push_back({m.central_locations.front(), value});
        } else {
            for (const LatLon& c : m.central_locations) {
                double v = value;
                if (which == EventMetric::kMeanSizeKm2) {
                    const size_t t = static_cast<size_t>(&c - m.central_locations.data());
                    v = geom.cell_area_km2() * m.size_cells[t];
                }
                pts.push_back({c, v});
            }
        }
    }
    return pts;
}

}  // namespace

void KernelSpec::validate() const {
    if (!(bandwidth_km > 0)) throw std::invalid_argument("kernel: bandwidth must be > 0");
}

MetricMap MetricMap::nan_map(const GridGeometry& geom, const std::string& metric) {
    MetricMap m;
    m.geom = geom;
    m.values = Eigen::ArrayXXd::Constant(geom.ny, geom.nx, kNaN);
    m.metric = metric;
    return m;
}

MetricMap initiation_density(const std::vector<StormMetrics>& metrics, const GridGeometry& geom,
                             const MaskArray& mask, const KernelSpec& kernel, int threads) {
    kernel.validate();
    const DomainCells cells = domain_cells(geom, mask);
    MetricMap map = MetricMap::nan_map(geom, "initiation_density");

    // One normalized kernel row per event; accumulation order over events
    // is fixed, parallelism is across events writing disjoint partial rows.
    std::vector<double> accum(cells.latlons.size(), 0.0);
    std::vector<std::vector<double>> rows(metrics.size());
    parallel_for(static_cast<int>(metrics.size()), threads, [&](int i) {
        kernel_row(metrics[static_cast<size_t>(i)].central_locations.front(), cells,
                   kernel.bandwidth_km, rows[static_cast<size_t>(i)]);
    });
    for (const auto& row : rows)
        for (size_t j = 0; j < row.size(); ++j) accum[j] += row[j];

    for (size_t j = 0; j < cells.xs.size(); ++j)
        map.values(cells.ys[j], cells.xs[j]) = accum[j];
    return map;
}

MetricMap weighted_metric_map(const std::vector<StormMetrics>& metrics, EventMetric metric,
                              const GridGeometry& geom, const MaskArray& mask,
                              const KernelSpec& kernel, MapAttribution attribution, int threads) {
    kernel.validate();
    if (metrics.empty()) throw std::invalid_argument("weighted_metric_map: no events");
    const DomainCells cells = domain_cells(geom, mask);
    const std::vector<SourcePoint> pts = source_points(metrics, metric, geom, attribution);

    std::vector<std::vector<double>> rows(pts.size());
    parallel_for(static_cast<int>(pts.size()), threads, [&](int i) {
        kernel_row(pts[static_cast<size_t>(i)].loc, cells, kernel.bandwidth_km,
                   rows[static_cast<size_t>(i)]);
    });

    MetricMap map = MetricMap::nan_map(
        geom, metric == EventMetric::kMeanSizeKm2 ? "mean_size" : "mean_duration");
    std::vector<double> wsum(cells.latlons.size(), 0.0), msum(cells.latlons.size(), 0.0);
    for (size_t i = 0; i < pts.size(); ++i) {
        for (size_t j = 0; j < rows[i].size(); ++j) {
            wsum[j] += rows[i][j];
            msum[j] += rows[i][j] * pts[i].metric;
        }
    }
    for (size_t j = 0; j < cells.xs.size(); ++j)
        map.values(cells.ys[j], cells.xs[j]) = msum[j] / wsum[j];
    return map;
}

MetricMap cellwise_map(const GridField& field, CellStat stat) {
    field.geom.validate();
    MetricMap map = MetricMap::nan_map(
        field.geom, stat == CellStat::kSeasonalMeanCm ? "seasonal_mean" : "intensity");
    for (int y = 0; y < field.geom.ny; ++y) {
        for (int x = 0; x < field.geom.nx; ++x) {
            if (!field.mask(y, x)) continue;
            double sum = 0.0;
            int wet = 0;
            for (const auto& s : field.steps) {
                const float v = s(y, x);
                if (v > 0.0f) {
                    sum += v;
                    ++wet;
                }
            }
            if (stat == CellStat::kSeasonalMeanCm) {
                map.values(y, x) = sum / 10.0;  // mm -> cm over the field's span
            } else {
                map.values(y, x) =
                    wet > 0 ? sum / wet / field.geom.dt_hours : kNaN;  // mm/hour, wet steps only
            }
        }
    }
    return map;
}

MetricMap ratio_map(const MetricMap& a, const MetricMap& b) {
    if (!(a.geom == b.geom)) throw std::invalid_argument("ratio_map: geometry mismatch");
    if (a.metric != b.metric) throw std::invalid_argument("ratio_map: metric mismatch");
    MetricMap out = MetricMap::nan_map(a.geom, a.metric + "_pct_change");
    for (int y = 0; y < a.geom.ny; ++y) {
        for (int x = 0; x < a.geom.nx; ++x) {
            const double va = a.values(y, x), vb = b.values(y, x);
            if (std::isnan(va) || std::isnan(vb) || va == 0.0) continue;
            out.values(y, x) = 100.0 * (vb - va) / va;
        }
    }
    return out;
}

void save_map(const MetricMap& map, const MaskArray& mask,
              const std::filesystem::path& pgrid_path) {
    // nt=1 PGRID container; NaN covers both out-of-mask and undefined cells.
    // Map values may be negative (percent changes), hence no field validation.
    std::ofstream out(pgrid_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + pgrid_path.string());
    out << "PGRD1\n";
    out << "nx=" << map.geom.nx << "\nny=" << map.geom.ny << "\nnt=1\n";
    char buf[64];
    auto fmt = [&](const char* k, double v) {
        std::snprintf(buf, sizeof buf, "%s=%.17g\n", k, v);
        out << buf;
    };
    fmt("dx_km", map.geom.dx_km);
    fmt("dy_km", map.geom.dy_km);
    fmt("dt_hours", map.geom.dt_hours);
    fmt("lat0", map.geom.lat0);
    fmt("lon0", map.geom.lon0);
    out << "units=mm_per_step\nEND\n";
    const float nanf = std::numeric_limits<float>::quiet_NaN();
    for (int y = 0; y < map.geom.ny; ++y) {
        for (int x = 0; x < map.geom.nx; ++x) {
            const float v = mask(y, x) ? static_cast<float>(map.values(y, x)) : nanf;
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    }
    if (!out) throw std::runtime_error("write failed: " + pgrid_path.string());
}

void write_map_csv(const MetricMap& map, const MaskArray& mask,
                   const std::filesystem::path& csv_path) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + csv_path.string());
    out << "x,y,lat,lon,value\n";
    char buf[128];
    for (int y = 0; y < map.geom.ny; ++y) {
        for (int x = 0; x < map.geom.nx; ++x) {
            if (!mask(y, x)) continue;
            const LatLon p = map.geom.cell_latlon(x, y);
            std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%.10g,%.12g\n", x, y, p.lat, p.lon,
                          map.values(y, x));
            out << buf;
        }
    }
}


}  // namespace rainstorm
