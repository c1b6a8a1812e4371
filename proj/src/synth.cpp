#include "rainstorm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rainstorm/metrics.hpp"

namespace rainstorm {

namespace {

struct Lobe {
    double cx, cy, radius, peak;
};

// Lobes of one storm at step offset k (0-based from birth).
std::vector<Lobe> lobes_at(const SynthStorm& st, int k) {
    std::vector<Lobe> lobes;
    const double cx = st.x0 + st.vx * k, cy = st.y0 + st.vy * k;
    if (st.split_offset >= 0 && k >= st.split_offset) {
        const int ks = k - st.split_offset;
        const double sx = st.x0 + st.vx * st.split_offset, sy = st.y0 + st.vy * st.split_offset;
        const double r = st.radius_cells * 0.75;
        lobes.push_back({cx, cy, r, st.peak_mm});
        lobes.push_back({sx + (st.vx + st.split_dvx) * ks, sy + (st.vy + st.split_dvy) * ks, r,
                         st.peak_mm});
    } else {
        lobes.push_back({cx, cy, st.radius_cells, st.peak_mm});
    }
    return lobes;
}

}  // namespace

FactorSummary SynthTruth::true_factors(const GridGeometry& geom) const {
    FactorSummary f;
    f.avg_intensity_mm_per_hour = sum_values_mm / sum_cells / geom.dt_hours;
    f.size_factor_km2 = geom.cell_area_km2() * sum_cells / sum_l_steps;
    f.duration_factor_hours = geom.dt_hours * sum_l_steps / n_storms;
    f.n_storms = n_storms;
    f.total_amount_mm_km2 = geom.cell_area_km2() * sum_values_mm;
    return f;
}

GridField render_synth(const SynthSpec& spec, SynthTruth* truth) {
    spec.geom.validate();
    GridField field = GridField::zeros(spec.geom, spec.nt);
    if (truth) {
        truth->owner.assign(static_cast<size_t>(spec.nt), {});
        truth->n_storms = static_cast<int>(spec.storms.size());
        truth->sum_values_mm = truth->sum_cells = truth->sum_l_steps = 0.0;
    }

    for (const SynthStorm& st : spec.storms) {
        if (truth) truth->sum_l_steps += std::min(st.l_steps, spec.nt - st.birth_t);
        for (int k = 0; k < st.l_steps; ++k) {
            const int t = st.birth_t + k;
            if (t < 0 || t >= spec.nt) continue;
            auto& slice = field.steps[static_cast<size_t>(t)];
            for (const Lobe& lb : lobes_at(st, k)) {
                const int x_lo = std::max(0, static_cast<int>(std::floor(lb.cx - lb.radius)));
                const int x_hi = std::min(spec.geom.nx - 1,
                                          static_cast<int>(std::ceil(lb.cx + lb.radius)));
                const int y_lo = std::max(0, static_cast<int>(std::floor(lb.cy - lb.radius)));
                const int y_hi = std::min(spec.geom.ny - 1,
                                          static_cast<int>(std::ceil(lb.cy + lb.radius)));
                for (int y = y_lo; y <= y_hi; ++y) {
                    for (int x = x_lo; x <= x_hi; ++x) {
                        const double d2 = (x - lb.cx) * (x - lb.cx) + (y - lb.cy) * (y - lb.cy);
                        const double r2 = lb.radius * lb.radius;
                        if (d2 > r2) continue;
                        // quadratic profile, still well above threshold at the rim
                        const float v =
                            static_cast<float>(lb.peak * (0.3 + 0.7 * (1.0 - d2 / r2)));
                        if (v > slice(y, x)) {
                            if (truth) {
                                auto& own = truth->owner[static_cast<size_t>(t)];
                                const auto [it, inserted] = own.try_emplace(cell_key(x, y), st.id);
                                if (!inserted) it->second = st.id;  // larger value wins
                            }
                            slice(y, x) = v;
                        }
                    }
                }
            }
        }
    }

    if (truth) {
        // aggregate sums from the rendered field, so overlaps cannot double-count
        for (int t = 0; t < spec.nt; ++t) {
            for (const auto& [key, id] : truth->owner[static_cast<size_t>(t)]) {
                const int x = static_cast<int>(static_cast<uint32_t>(key));
                const int y = static_cast<int>(key >> 32);
                truth->sum_values_mm += field.steps[static_cast<size_t>(t)](y, x);
                truth->sum_cells += 1.0;
            }
        }
    }
    return field;
}

SynthSpec random_scenario(const GridGeometry& geom, int nt, uint64_t seed,
                          const ScenarioParams& params) {
    SynthSpec spec;
    spec.geom = geom;
    spec.nt = nt;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double margin = params.max_radius + 2.0;
    for (int i = 0; i < params.n_storms; ++i) {
        SynthStorm st;
        st.id = i;
        st.l_steps = params.min_duration +
                     static_cast<int>(unit(rng) * (params.max_duration - params.min_duration + 1));
        st.l_steps = std::min(st.l_steps, nt);
        st.birth_t = static_cast<int>(unit(rng) * (nt - st.l_steps + 1));
        st.radius_cells = params.min_radius + unit(rng) * (params.max_radius - params.min_radius);
        st.peak_mm = 2.0 + unit(rng) * 6.0;
        const double ang = unit(rng) * 2.0 * std::numbers::pi;
        const double speed = unit(rng) * params.max_speed_cells;
        st.vx = speed * std::cos(ang);
        st.vy = speed * std::sin(ang);
        if (unit(rng) < params.split_probability && st.l_steps >= 4) {
            st.split_offset = st.l_steps / 2;
            st.split_dvx = (unit(rng) - 0.5) * 1.6;
            st.split_dvy = (unit(rng) - 0.5) * 1.6;
        }

        // placement: keep concurrently alive storms apart over their whole paths
        const double travel = params.max_speed_cells * st.l_steps;
        bool placed = false;
        for (int attempt = 0; attempt < 400 && !placed; ++attempt) {
            st.x0 = margin + unit(rng) * (geom.nx - 2 * margin);
            st.y0 = margin + unit(rng) * (geom.ny - 2 * margin);
            placed = true;
            for (const SynthStorm& other : spec.storms) {
                const bool overlap_in_time = st.birth_t < other.birth_t + other.l_steps &&
                                             other.birth_t < st.birth_t + st.l_steps;
                if (!overlap_in_time) continue;
                const double other_travel = params.max_speed_cells * other.l_steps;
                const double need = params.min_separation_cells + travel + other_travel;
                if (std::hypot(st.x0 - other.x0, st.y0 - other.y0) < need) {
                    placed = false;
                    break;
                }
            }
        }
        if (placed) spec.storms.push_back(st);
    }
    // reassign ids contiguously in case placement dropped storms
    for (size_t i = 0; i < spec.storms.size(); ++i) spec.storms[i].id = static_cast<int>(i);
    return spec;
}

double tracking_accuracy(const std::vector<StormEvent>& events, const SynthTruth& truth) {
    // Majority ground-truth owner of one segment.
    auto segment_owner = [&](const Segment& s) {
        std::unordered_map<int, int> votes;
        for (const Region& r : s.regions) {
            for (const Cell& c : r.cells) {
                const auto& own = truth.owner[static_cast<size_t>(s.t)];
                const auto it = own.find(cell_key(c));
                if (it != own.end()) ++votes[it->second];
            }
        }
        int best = -1, best_n = 0;
        for (const auto& [id, n] : votes)
            if (n > best_n || (n == best_n && id < best)) {
                best = id;
                best_n = n;
            }
        return best;
    };

    int total = 0, correct = 0;
    for (const StormEvent& ev : events) {
        std::vector<int> owners;
        std::unordered_map<int, int> votes;
        for (const auto& segs : ev.steps) {
            for (const Segment& s : segs) {
                const int o = segment_owner(s);
                owners.push_back(o);
                if (o >= 0) ++votes[o];
            }
        }
        int label = -1, label_n = 0;
        for (const auto& [id, n] : votes)
            if (n > label_n || (n == label_n && id < label)) {
                label = id;
                label_n = n;
            }
        for (int o : owners) {
            ++total;
            if (o == label && o >= 0) ++correct;
        }
    }
    return total > 0 ? static_cast<double>(correct) / total : 1.0;
}

void write_truth_json(const std::filesystem::path& path, const SynthSpec& spec,
                      const SynthTruth& truth) {
    nlohmann::json j;
    j["n_storms"] = truth.n_storms;
    j["sum_values_mm"] = truth.sum_values_mm;
    j["sum_cells"] = truth.sum_cells;
    j["sum_l_steps"] = truth.sum_l_steps;
    const FactorSummary f = truth.true_factors(spec.geom);
    j["factors"] = {{"avg_intensity_mm_per_hour", f.avg_intensity_mm_per_hour},
                    {"size_factor_km2", f.size_factor_km2},
                    {"duration_factor_hours", f.duration_factor_hours},
                    {"n_storms", f.n_storms},
                    {"total_amount_mm_km2", f.total_amount_mm_km2}};
    nlohmann::json storms = nlohmann::json::array();
    for (const SynthStorm& st : spec.storms) {
        storms.push_back({{"id", st.id},
                          {"birth_t", st.birth_t},
                          {"l_steps", st.l_steps},
                          {"x0", st.x0},
                          {"y0", st.y0},
                          {"vx", st.vx},
                          {"vy", st.vy},
                          {"radius_cells", st.radius_cells},
                          {"peak_mm", st.peak_mm},
                          {"split_offset", st.split_offset}});
    }
    j["storms"] = std::move(storms);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace rainstorm
