// Per-storm metrics, tail trimming, the four-factor decomposition of total
// precipitation, and bootstrap comparison of factor sets.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rainstorm/track.hpp"

namespace rainstorm {

struct StormMetrics {
    int event_id = 0;
    int l_steps = 0;
    double duration_hours = 0.0;
    std::vector<int> size_cells;                      // s(S_i,t), per step
    std::vector<double> mean_intensity_mm_per_step;   // a(S_i,t), per step
    std::vector<LatLon> central_locations;            // c(S_i,t), per step
    double total_amount_mm_km2 = 0.0;
};

// Exact decomposition: avg_intensity * size_factor * duration_factor * n
// equals total_amount.
struct FactorSummary {
    double avg_intensity_mm_per_hour = 0.0;
    double size_factor_km2 = 0.0;
    double duration_factor_hours = 0.0;
    double n_storms = 0.0;  // fractional under weighted region assignment
    double total_amount_mm_km2 = 0.0;
    std::string region_id = "all";
    std::string season_id = "all";
};

struct FactorDelta {
    std::string factor;
    double baseline = 0.0;
    double comparison = 0.0;
    double pct_diff = 0.0;                 // 100*(B-A)/A
    std::optional<double> pct_per_kelvin;  // pct_diff / delta_T
    std::optional<double> ci_lo, ci_hi;    // bootstrap percentile bounds on pct_diff
};

struct FactorComparison {
    std::vector<FactorDelta> rows;  // total, intensity, size, duration, number
    const FactorDelta& row(const std::string& factor) const;
};

// How events are assigned to a region mask.
enum class RegionAssignment {
    kInitiationPoint,   // event counts fully iff c(S_i,1) lies in the region
    kPrecipWeighted,    // event counts fractionally by in-region precipitation share
};

struct RegionFilter {
    const MaskArray* mask = nullptr;  // region cells; null = whole domain
    RegionAssignment assignment = RegionAssignment::kInitiationPoint;
};

StormMetrics compute_metrics(const StormEvent& event, const GridGeometry& geom);
std::vector<StormMetrics> compute_all_metrics(const std::vector<StormEvent>& events,
                                              const GridGeometry& geom, int threads = 1);

// Drop the maximal ascending-total prefix of events whose summed amount
// stays within fraction of the grand total.
std::vector<StormEvent> trim_negligible(const std::vector<StormEvent>& events,
                                        const GridGeometry& geom, double fraction = 0.001);

FactorSummary factorize(const std::vector<StormEvent>& events, const GridGeometry& geom,
                        const RegionFilter& region = {});

FactorComparison compare_factors(const FactorSummary& a, const FactorSummary& b,
                                 std::optional<double> delta_T_K = std::nullopt);

struct BootstrapParams {
    int n_boot = 2000;
    double level = 0.95;
    uint64_t seed = 0;
    int threads = 1;
};

// Percentile confidence intervals for the per-factor percent differences,
// resampling whole events with replacement independently in each set.
// Results are deterministic for a given seed regardless of thread count.
FactorComparison bootstrap_ci(const std::vector<StormEvent>& events_a,
                              const std::vector<StormEvent>& events_b, const GridGeometry& geom_a,
                              const GridGeometry& geom_b, const BootstrapParams& params,
                              std::optional<double> delta_T_K = std::nullopt,
                              const RegionFilter& region_a = {}, const RegionFilter& region_b = {});

void write_summary_csv(const std::filesystem::path& path, const FactorSummary& s);
void write_comparison_csv(const std::filesystem::path& path, const FactorComparison& c);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<StormMetrics>& metrics,
                       const GridGeometry& geom);

}  // namespace rainstorm
