// Per-grid-cell maps of storm statistics: kernel-smoothed initiation
// density and size/duration averages, cell-wise seasonal mean and
// intensity, and percent-ratio maps between datasets.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rainstorm/metrics.hpp"

namespace rainstorm {

// Gaussian kernel on great-circle distance, renormalized so the weights of
// any source point sum to one over the in-mask grid cells.
struct KernelSpec {
    double bandwidth_km = 200.0;

    void validate() const;
};

struct MetricMap {
    GridGeometry geom;
    Eigen::ArrayXXd values;  // NaN outside mask / where undefined
    std::string metric;

    static MetricMap nan_map(const GridGeometry& geom, const std::string& metric);
};

enum class MapAttribution {
    kInitiation,  // weight at the event's first central location (default)
    kPerStep,     // weight at every step's central location
};

enum class CellStat { kSeasonalMeanCm, kMeanIntensity };

// n(s) = sum over events of k(c(S_i,1), s); sums to the event count.
MetricMap initiation_density(const std::vector<StormMetrics>& metrics, const GridGeometry& geom,
                             const MaskArray& mask, const KernelSpec& kernel, int threads = 1);

// Kernel-weighted average of a per-event metric (mean size in km2, or
// duration in hours) across the domain.
enum class EventMetric { kMeanSizeKm2, kDurationHours };
MetricMap weighted_metric_map(const std::vector<StormMetrics>& metrics, EventMetric metric,
                              const GridGeometry& geom, const MaskArray& mask,
                              const KernelSpec& kernel,
                              MapAttribution attribution = MapAttribution::kInitiation,
                              int threads = 1);

// Cell-wise statistics that need no storm identification.
MetricMap cellwise_map(const GridField& field, CellStat stat);

// Percent change per cell: 100*(b-a)/a, NaN where a is zero or NaN.
MetricMap ratio_map(const MetricMap& a, const MetricMap& b);

void save_map(const MetricMap& map, const MaskArray& mask, const std::filesystem::path& pgrid_path);
void write_map_csv(const MetricMap& map, const MaskArray& mask,
                   const std::filesystem::path& csv_path);

}  // namespace rainstorm
