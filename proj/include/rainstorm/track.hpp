// Linking rainstorm segments across consecutive timesteps into events,
// with split/merge handling, plus the event JSON-lines file format.
#pragma once

#include <filesystem>
#include <vector>

#include "rainstorm/identify.hpp"

namespace rainstorm {

// A tracked rainstorm event: one or more segments at every timestep of
// [birth_t, death_t].
struct StormEvent {
    int id = 0;
    int birth_t = 0;
    int death_t = 0;
    // steps[k] holds the segments assigned at timestep birth_t + k.
    std::vector<std::vector<Segment>> steps;

    int l_steps() const { return death_t - birth_t + 1; }
    const std::vector<Segment>& segments_at(int t) const {
        return steps[static_cast<size_t>(t - birth_t)];
    }
    int cell_count_at(int t) const;
    double total_mm() const;
};

struct TrackParams {
    double min_overlap_fraction = 0.3;  // intersection over minimum
    double max_centroid_jump_km = 120.0;
    double max_turn_deg = 120.0;

    void validate() const;
};

// Intersection of cell sets over the smaller set, in [0,1].
double similarity(const Segment& a, const Segment& b);

// Sequential tracker: each segment at t joins the qualifying alive event
// with the largest prior-step footprint, otherwise founds a new event.
// Multiple segments may join one event at the same timestep.
std::vector<StormEvent> track(const std::vector<std::vector<Segment>>& segments_by_t,
                              const TrackParams& params, const GridGeometry& geom);

// Per-event polyline of per-step central locations (see metrics).
std::vector<std::vector<LatLon>> trajectories(const std::vector<StormEvent>& events,
                                              const GridGeometry& geom);

// Event file: one JSON object per line, ordered by id:
// {"id","birth_t","death_t","steps":[{"t","cells":[[x,y],...],"values":[...]}]}
void write_events(const std::filesystem::path& path, const std::vector<StormEvent>& events);
std::vector<StormEvent> read_events(const std::filesystem::path& path);

}  // namespace rainstorm
