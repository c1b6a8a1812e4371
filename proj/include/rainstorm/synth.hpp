// Synthetic precipitation fields with known storm schedules, for tests,
// demos, and ground-truth recovery checks.
#pragma once

#include <cstdint>
#include <filesystem>
#include <unordered_map>
#include <vector>

#include "rainstorm/metrics.hpp"

namespace rainstorm {

// One scripted storm: a moving quadratic-profile disk, optionally splitting
// into two diverging lobes partway through its life.
struct SynthStorm {
    int id = 0;
    int birth_t = 0;
    int l_steps = 1;
    double x0 = 0, y0 = 0;  // center at birth, cell coordinates
    double vx = 0, vy = 0;  // cells per step
    double radius_cells = 3.0;
    double peak_mm = 4.0;
    int split_offset = -1;  // steps after birth when a second lobe splits off; -1 = never
    double split_dvx = 0, split_dvy = 0;  // extra velocity of the second lobe
};

struct SynthSpec {
    GridGeometry geom;
    int nt = 0;
    std::vector<SynthStorm> storms;
};

// Ground truth: cell ownership per timestep plus aggregate sums.
struct SynthTruth {
    std::vector<std::unordered_map<int64_t, int>> owner;  // cell key -> storm id
    int n_storms = 0;
    double sum_values_mm = 0.0;  // over all storm cells and steps
    double sum_cells = 0.0;      // sum of s(S_i,t)
    double sum_l_steps = 0.0;

    FactorSummary true_factors(const GridGeometry& geom) const;
};

GridField render_synth(const SynthSpec& spec, SynthTruth* truth = nullptr);

struct ScenarioParams {
    int n_storms = 12;
    int min_duration = 2, max_duration = 8;
    double min_radius = 2.5, max_radius = 5.0;
    double max_speed_cells = 1.5;
    double split_probability = 0.3;
    double min_separation_cells = 16.0;  // between concurrently alive storm centers
};

SynthSpec random_scenario(const GridGeometry& geom, int nt, uint64_t seed,
                          const ScenarioParams& params = {});

// Fraction of identified segments whose tracked event agrees with the
// ground-truth owner (segment owner by cell majority; event label by
// majority over its segments).
double tracking_accuracy(const std::vector<StormEvent>& events, const SynthTruth& truth);

void write_truth_json(const std::filesystem::path& path, const SynthSpec& spec,
                      const SynthTruth& truth);

}  // namespace rainstorm
