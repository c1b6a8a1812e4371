#include "rainstorm/track.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace rainstorm {

namespace {

using CellSet = std::unordered_set<int64_t>;

CellSet cell_set_of(const Segment& s) {
    CellSet set;
    for (const Region& r : s.regions)
        for (const Cell& c : r.cells) set.insert(cell_key(c));
    return set;
}

// Tracker-side state for one alive event.
struct Live {
    int event_index;       // into the result vector
    CellSet footprint;     // union of segments at the previous timestep
    double cx, cy;         // precip-weighted centroid (cell indices)
    double prev_cx, prev_cy;
    bool has_prev = false;  // true once the event spans >= 2 steps
    int size_cells = 0;
    std::vector<Segment> pending;  // segments matched at the current timestep
};

double angle_between_deg(double ax, double ay, double bx, double by) {
    const double na = std::hypot(ax, ay), nb = std::hypot(bx, by);
    if (na < 1e-12 || nb < 1e-12) return 0.0;  // no movement, no turn
    const double c = std::clamp((ax * bx + ay * by) / (na * nb), -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

void weighted_centroid(const std::vector<Segment>& segs, double& cx, double& cy) {
    double wx = 0.0, wy = 0.0, w = 0.0;
    for (const Segment& s : segs) {
        for (const Region& r : s.regions) {
            for (size_t i = 0; i < r.cells.size(); ++i) {
                wx += r.values[i] * r.cells[i].x;
                wy += r.values[i] * r.cells[i].y;
                w += r.values[i];
            }
        }
    }
    cx = wx / w;
    cy = wy / w;
}

}  // namespace

int StormEvent::cell_count_at(int t) const {
    int n = 0;
    for (const Segment& s : segments_at(t)) n += s.cell_count();
    return n;
}

double StormEvent::total_mm() const {
    double total = 0.0;
    for (const auto& segs : steps)
        for (const Segment& s : segs) total += s.total_mm();
    return total;
}

void TrackParams::validate() const {
    if (!(min_overlap_fraction > 0) || min_overlap_fraction > 1)
        throw std::invalid_argument("track: overlap fraction must be in (0,1]");
    if (max_centroid_jump_km < 0 || max_turn_deg < 0)
        throw std::invalid_argument("track: jump and turn limits must be >= 0");
}

double similarity(const Segment& a, const Segment& b) {
    const CellSet sa = cell_set_of(a);
    const CellSet sb = cell_set_of(b);
    const CellSet& small = sa.size() <= sb.size() ? sa : sb;
    const CellSet& large = sa.size() <= sb.size() ? sb : sa;
    size_t inter = 0;
    for (int64_t k : small) inter += large.count(k);
    return small.empty() ? 0.0 : double(inter) / double(small.size());
}

std::vector<StormEvent> track(const std::vector<std::vector<Segment>>& segments_by_t,
                              const TrackParams& params, const GridGeometry& geom) {
    params.validate();
    for (size_t t = 0; t < segments_by_t.size(); ++t)
        for (const Segment& s : segments_by_t[t])
            if (s.t != static_cast<int>(t))
                throw std::invalid_argument("track: segment timestep indices are not consecutive");

    std::vector<StormEvent> events;
    std::vector<Live> alive;  // ordered by event id

    for (int t = 0; t < static_cast<int>(segments_by_t.size()); ++t) {
        for (Live& lv : alive) lv.pending.clear();
        std::vector<Live> born;  // events founded at t; not candidates until t+1

        for (const Segment& seg : segments_by_t[static_cast<size_t>(t)]) {
            const CellSet seg_cells = cell_set_of(seg);
            const auto [sx, sy] = seg.centroid_xy();

            int best = -1;
            for (int k = 0; k < static_cast<int>(alive.size()); ++k) {
                const Live& lv = alive[static_cast<size_t>(k)];
                size_t inter = 0;
                for (int64_t key : seg_cells) inter += lv.footprint.count(key);
                const double sim =
                    double(inter) / double(std::min(seg_cells.size(), lv.footprint.size()));
                if (sim < params.min_overlap_fraction) continue;

                const double jx = (sx - lv.cx) * geom.dx_km, jy = (sy - lv.cy) * geom.dy_km;
                if (std::hypot(jx, jy) > params.max_centroid_jump_km) continue;

                if (lv.has_prev) {
                    const double px = (lv.cx - lv.prev_cx) * geom.dx_km;
                    const double py = (lv.cy - lv.prev_cy) * geom.dy_km;
                    if (angle_between_deg(px, py, jx, jy) > params.max_turn_deg) continue;
                }
                // several qualifying events: take the one with the largest
                // prior-step size; alive is id-ordered, so ties keep the
                // lower id
                if (best < 0 || lv.size_cells > alive[static_cast<size_t>(best)].size_cells)
                    best = k;
            }

            if (best >= 0) {
                alive[static_cast<size_t>(best)].pending.push_back(seg);
            } else {
                StormEvent ev;
                ev.id = static_cast<int>(events.size());
                ev.birth_t = ev.death_t = t;
                ev.steps.push_back({seg});
                events.push_back(std::move(ev));
                Live lv;
                lv.event_index = static_cast<int>(events.size()) - 1;
                lv.footprint = seg_cells;
                lv.cx = sx;
                lv.cy = sy;
                lv.size_cells = seg.cell_count();
                born.push_back(std::move(lv));
            }
        }

        // Extend matched events; events with no match at t close at t-1.
        std::vector<Live> next_alive;
        for (Live& lv : alive) {
            if (lv.pending.empty()) continue;
            std::sort(lv.pending.begin(), lv.pending.end(),
                      [](const Segment& a, const Segment& b) { return a.id < b.id; });
            StormEvent& ev = events[static_cast<size_t>(lv.event_index)];
            ev.death_t = t;
            ev.steps.push_back(lv.pending);

            Live nxt;
            nxt.event_index = lv.event_index;
            for (const Segment& s : lv.pending)
                for (const Region& r : s.regions)
                    for (const Cell& c : r.cells) nxt.footprint.insert(cell_key(c));
            nxt.prev_cx = lv.cx;
            nxt.prev_cy = lv.cy;
            nxt.has_prev = true;
            weighted_centroid(lv.pending, nxt.cx, nxt.cy);
            nxt.size_cells = 0;
            for (const Segment& s : lv.pending) nxt.size_cells += s.cell_count();
            next_alive.push_back(std::move(nxt));
        }
        for (Live& lv : born) next_alive.push_back(std::move(lv));
        std::sort(next_alive.begin(), next_alive.end(),
                  [](const Live& a, const Live& b) { return a.event_index < b.event_index; });
        alive = std::move(next_alive);
    }
    return events;
}

std::vector<std::vector<LatLon>> trajectories(const std::vector<StormEvent>& events,
                                              const GridGeometry& geom) {
    std::vector<std::vector<LatLon>> out;
    out.reserve(events.size());
    for (const StormEvent& ev : events) {
        std::vector<LatLon> line;
        line.reserve(static_cast<size_t>(ev.l_steps()));
        for (const auto& segs : ev.steps) {
            std::vector<LatLon> pts;
            std::vector<double> wts;
            for (const Segment& s : segs) {
                for (const Region& r : s.regions) {
                    for (size_t i = 0; i < r.cells.size(); ++i) {
                        pts.push_back(geom.cell_latlon(r.cells[i].x, r.cells[i].y));
                        wts.push_back(r.values[i]);
                    }
                }
            }
            line.push_back(spherical_weighted_mean(pts, wts));
        }
        out.push_back(std::move(line));
    }
    return out;
}

void write_events(const std::filesystem::path& path, const std::vector<StormEvent>& events) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const StormEvent& ev : events) {
        nlohmann::json j;
        j["id"] = ev.id;
        j["birth_t"] = ev.birth_t;
        j["death_t"] = ev.death_t;
        nlohmann::json steps = nlohmann::json::array();
        for (int k = 0; k < static_cast<int>(ev.steps.size()); ++k) {
            for (const Segment& s : ev.steps[static_cast<size_t>(k)]) {
                nlohmann::json step;
                step["t"] = ev.birth_t + k;
                nlohmann::json cells = nlohmann::json::array();
                nlohmann::json values = nlohmann::json::array();
                for (const Region& r : s.regions) {
                    for (size_t i = 0; i < r.cells.size(); ++i) {
                        cells.push_back({r.cells[i].x, r.cells[i].y});
                        values.push_back(r.values[i]);
                    }
                }
                step["cells"] = std::move(cells);
                step["values"] = std::move(values);
                steps.push_back(std::move(step));
            }
        }
        j["steps"] = std::move(steps);
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<StormEvent> read_events(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<StormEvent> events;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": bad event record: " + e.what());
        }
        StormEvent ev;
        ev.id = j.at("id").get<int>();
        ev.birth_t = j.at("birth_t").get<int>();
        ev.death_t = j.at("death_t").get<int>();
        if (ev.death_t < ev.birth_t)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": death_t before birth_t");
        ev.steps.assign(static_cast<size_t>(ev.l_steps()), {});
        for (const auto& step : j.at("steps")) {
            const int t = step.at("t").get<int>();
            if (t < ev.birth_t || t > ev.death_t)
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": step outside [birth_t, death_t]");
            Segment s;
            s.t = t;
            Region r;
            const auto& cells = step.at("cells");
            const auto& values = step.at("values");
            if (cells.size() != values.size())
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": cells/values length mismatch");
            for (size_t i = 0; i < cells.size(); ++i) {
                r.cells.push_back({cells[i][0].get<int>(), cells[i][1].get<int>()});
                r.values.push_back(values[i].get<float>());
            }
            s.id = static_cast<int>(ev.steps[static_cast<size_t>(t - ev.birth_t)].size());
            s.regions.push_back(std::move(r));
            ev.steps[static_cast<size_t>(t - ev.birth_t)].push_back(std::move(s));
        }
        for (const auto& segs : ev.steps)
            if (segs.empty())
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": event has a timestep with no segments");
        events.push_back(std::move(ev));
    }
    return events;
}

}  // namespace rainstorm
