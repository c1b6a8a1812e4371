// Data-driven future precipitation: resize observed storms by
// model-projected size changes, then transform per-cell intensity
// distributions by model-projected quantile changes. Also the grid-cell-wise
// baseline simulator that skips the storm step.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rainstorm/spatial.hpp"

namespace rainstorm {

struct SimLogEntry {
    std::string kind;  // storm_removed | resize_factor_missing | overlap |
                       // promote_only_cell | promotion_shortfall
    int t = -1;
    int x = -1;
    int y = -1;
    int event_id = -1;
    int count = 0;
    double value = 0.0;
};

void write_sim_log(const std::filesystem::path& path, const std::vector<SimLogEntry>& log);

// Per-cell wet fractions and paired quantile tables over positive
// intensities, built from a (resized) model baseline and the model future.
struct CellTransfer {
    bool valid = false;         // false: outside domain, apply as identity
    bool promote_only = false;  // baseline dry but future wet: no quantile table
    double w_b = 0.0, w_f = 0.0;
    std::vector<double> q_b, q_f;  // nondecreasing, one entry per level
};

struct QuantileTransfer {
    GridGeometry geom;
    int quantile_count = 100;
    std::vector<CellTransfer> cells;  // indexed y*nx + x

    const CellTransfer& at(int x, int y) const {
        return cells[static_cast<size_t>(y) * geom.nx + x];
    }
};

struct SimParams {
    IdentParams ident;
    TrackParams track;
    KernelSpec kernel;
    double trim_fraction = 0.001;
    int quantile_count = 100;
    double substorm_gap_km = 120.0;
    uint64_t seed = 0;
    int threads = 1;
};

struct SimResult {
    GridField field;
    std::vector<SimLogEntry> log;
};

// Location-dependent linear resize factors: the square root of the ratio of
// kernel-estimated mean storm sizes, future over baseline.
MetricMap build_resize_map(const std::vector<StormMetrics>& baseline_metrics,
                           const std::vector<StormMetrics>& future_metrics,
                           const GridGeometry& geom, const MaskArray& mask,
                           const KernelSpec& kernel, int threads = 1);

// Partition a segment into sub-storms whose mutual edge distance exceeds
// gap_km; each gets its own center and resize factor.
std::vector<Segment> split_substorms(const Segment& segment, double gap_km,
                                     const GridGeometry& geom, int connectivity = 8);

// Scale the distances of all storm cells to the storm center by r, staying
// on the original grid: each target cell takes the value of the nearest
// pre-image cell under the inverse scaling. Values are moved, never scaled.
// An empty result means the storm vanished (severe shrink).
Segment resize_storm(const Segment& substorm, double r, const GridGeometry& geom,
                     const MaskArray& mask);

struct ResizeOptions {
    double gap_km = 120.0;
    int connectivity = 8;
    // true: keep precipitation not covered by any identified segment
    // (pipeline mode, preserves the no-change identity); false: zero all
    // non-storm cells (the standalone storm-only field).
    bool keep_background = false;
};

// Replace every segment of every event by its resized version, factor
// looked up in resize_map at the sub-storm center. Overlapping placements
// take the per-cell maximum and are logged.
SimResult resize_field(const GridField& field, const std::vector<StormEvent>& events,
                       const MetricMap& resize_map, const ResizeOptions& options);

QuantileTransfer build_quantile_transfer(const GridField& baseline_resized,
                                         const GridField& future, int quantile_count = 100,
                                         int threads = 1);

// Single-series transfer application (step 1: wet-count change by demotion
// or neighbor-ranked promotion; step 2: quantile-ratio rescaling).
// spatial_neighbors holds the same-length series of in-mask 8-neighbors.
std::vector<float> apply_quantile_transfer(const std::vector<float>& series,
                                           const CellTransfer& transfer,
                                           const std::vector<std::vector<float>>& spatial_neighbors,
                                           uint64_t seed, std::vector<SimLogEntry>* log = nullptr,
                                           int log_x = -1, int log_y = -1);

// Whole-field application; per-cell transfers come from the closest model
// grid cell, promotion reads neighbors from the pre-adjustment field.
SimResult apply_transfer_field(const GridField& field, const QuantileTransfer& transfer,
                               uint64_t seed, int threads = 1);

// Full pipeline (identify/track all three fields, trim, resize map from the
// model pair, resize obs and baseline identically, transfer per cell).
SimResult simulate_future(const GridField& obs, const GridField& baseline,
                          const GridField& future, const SimParams& params);

// Intensity-only transformation per cell from the unresized model fields.
SimResult gridcellwise_simulate(const GridField& obs, const GridField& baseline,
                                const GridField& future, const SimParams& params);

}  // namespace rainstorm
