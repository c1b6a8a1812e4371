#include "rainstorm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "rainstorm/parallel.hpp"

namespace rainstorm {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Type-7 quantile of an already-sorted sample.
double quantile_sorted(const std::vector<float>& v, double p) {
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const size_t lo = static_cast<size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - static_cast<double>(lo)) * (double(v[lo + 1]) - double(v[lo]));
}

// Empirical probability level of x within the sorted positive sample,
// plotting positions (i - 0.5)/n, linear between points, clamped at the
// ends. Equal values share the level of their first occurrence.
double empirical_level(const std::vector<float>& sorted_pos, float x) {
    const size_t n = sorted_pos.size();
    auto level = [n](size_t i) { return (static_cast<double>(i) + 0.5) / static_cast<double>(n); };
    if (x <= sorted_pos.front()) return level(0);
    if (x >= sorted_pos.back()) {
        if (x == sorted_pos.back()) {
            const size_t first =
                static_cast<size_t>(std::lower_bound(sorted_pos.begin(), sorted_pos.end(), x) -
                                    sorted_pos.begin());
            return level(first);
        }
        return level(n - 1);
    }
    const size_t k = static_cast<size_t>(
        std::lower_bound(sorted_pos.begin(), sorted_pos.end(), x) - sorted_pos.begin());
    if (sorted_pos[k] == x) return level(k);
    const double x0 = sorted_pos[k - 1], x1 = sorted_pos[k];
    return level(k - 1) + (level(k) - level(k - 1)) * (double(x) - x0) / (x1 - x0);
}

// Quantile-ratio q_f/q_b interpolated at probability level p; levels are
// (j + 0.5)/Q with flat extrapolation past both ends.
double ratio_at(const CellTransfer& tr, double p, int Q) {
    auto lvl = [Q](int j) { return (static_cast<double>(j) + 0.5) / Q; };
    auto ratio = [&](int j) {
        return tr.q_f[static_cast<size_t>(j)] / tr.q_b[static_cast<size_t>(j)];
    };
    if (p <= lvl(0)) return ratio(0);
    if (p >= lvl(Q - 1)) return ratio(Q - 1);
    const int j = static_cast<int>((p * Q) - 0.5);  // lvl(j) <= p < lvl(j+1)
    const double f = (p - lvl(j)) / (lvl(j + 1) - lvl(j));
    return ratio(j) + f * (ratio(j + 1) - ratio(j));
}

std::vector<float> positive_sorted(const std::vector<float>& series) {
    std::vector<float> pos;
    for (float v : series)
        if (v > 0.0f) pos.push_back(v);
    std::sort(pos.begin(), pos.end());
    return pos;
}

CellTransfer build_cell_transfer(const std::vector<float>& base_series,
                                 const std::vector<float>& fut_series, int Q) {
    CellTransfer tr;
    tr.valid = true;
    std::vector<float> bpos = positive_sorted(base_series);
    std::vector<float> fpos = positive_sorted(fut_series);
    tr.w_b = static_cast<double>(bpos.size()) / static_cast<double>(base_series.size());
    tr.w_f = static_cast<double>(fpos.size()) / static_cast<double>(fut_series.size());
    if (bpos.empty()) {
        tr.promote_only = !fpos.empty();
        return tr;
    }
    if (fpos.empty()) return tr;  // all-demote; no table needed
    tr.q_b.resize(static_cast<size_t>(Q));
    tr.q_f.resize(static_cast<size_t>(Q));
    for (int j = 0; j < Q; ++j) {
        const double p = (static_cast<double>(j) + 0.5) / Q;
        tr.q_b[static_cast<size_t>(j)] = quantile_sorted(bpos, p);
        tr.q_f[static_cast<size_t>(j)] = quantile_sorted(fpos, p);
    }
    return tr;
}

}  // namespace

void write_sim_log(const std::filesystem::path& path, const std::vector<SimLogEntry>& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const SimLogEntry& e : log) {
        nlohmann::json j;
        j["kind"] = e.kind;
        if (e.t >= 0) j["t"] = e.t;
        if (e.x >= 0) j["x"] = e.x;
        if (e.y >= 0) j["y"] = e.y;
        if (e.event_id >= 0) j["event_id"] = e.event_id;
        if (e.count > 0) j["count"] = e.count;
        if (e.value != 0.0) j["value"] = e.value;
        out << j.dump() << '\n';
    }
}

MetricMap build_resize_map(const std::vector<StormMetrics>& baseline_metrics,
                           const std::vector<StormMetrics>& future_metrics,
                           const GridGeometry& geom, const MaskArray& mask,
                           const KernelSpec& kernel, int threads) {
    const MetricMap size_b = weighted_metric_map(baseline_metrics, EventMetric::kMeanSizeKm2, geom,
                                                 mask, kernel, MapAttribution::kInitiation, threads);
    const MetricMap size_f = weighted_metric_map(future_metrics, EventMetric::kMeanSizeKm2, geom,
                                                 mask, kernel, MapAttribution::kInitiation, threads);
    MetricMap r = MetricMap::nan_map(geom, "resize_factor");
    for (int y = 0; y < geom.ny; ++y) {
        for (int x = 0; x < geom.nx; ++x) {
            const double b = size_b.values(y, x), f = size_f.values(y, x);
            if (std::isnan(b) || std::isnan(f) || b <= 0.0) continue;  // NaN propagates
            r.values(y, x) = std::sqrt(f / b);  // area ratio -> linear factor
        }
    }
    return r;
}

std::vector<Segment> split_substorms(const Segment& segment, double gap_km,
                                     const GridGeometry& geom, int connectivity) {
    if (gap_km < 0) throw std::invalid_argument("split_substorms: gap must be >= 0");
    // Rebuild contiguous pieces from the cell union (identical to the
    // segment's constituent regions), then group pieces by edge distance.
    std::unordered_map<int64_t, float> value_of;
    int xmin = 1 << 30, xmax = -(1 << 30), ymin = 1 << 30, ymax = -(1 << 30);
    for (const Region& r : segment.regions) {
        for (size_t i = 0; i < r.cells.size(); ++i) {
            value_of[cell_key(r.cells[i])] = r.values[i];
            xmin = std::min(xmin, r.cells[i].x);
            xmax = std::max(xmax, r.cells[i].x);
            ymin = std::min(ymin, r.cells[i].y);
            ymax = std::max(ymax, r.cells[i].y);
        }
    }
    const int nx = xmax - xmin + 1, ny = ymax - ymin + 1;
    Eigen::ArrayXXf patch = Eigen::ArrayXXf::Zero(ny, nx);
    for (const auto& [key, v] : value_of) {
        const int x = static_cast<int>(static_cast<uint32_t>(key)) - xmin;
        const int y = static_cast<int>(key >> 32) - ymin;
        patch(y, x) = v;
    }
    IdentParams p;
    p.connectivity = connectivity;
    // every stored cell is wet here; the threshold only needs to admit all of them
    p.wet_threshold_mm_per_step = std::numeric_limits<double>::min();
    std::vector<Region> pieces =
        connected_regions(patch, MaskArray::Constant(ny, nx, true), p);
    for (Region& r : pieces)
        for (Cell& c : r.cells) {
            c.x += xmin;
            c.y += ymin;
        }

    std::vector<Segment> out;
    for (Segment& s : almost_connected_label(pieces, gap_km / 2.0, geom, segment.t)) {
        // almost_connected_label merges at gap <= 2*radius; radius gap/2
        // yields exactly the <= gap_km grouping
        s.id = static_cast<int>(out.size());
        out.push_back(std::move(s));
    }
    return out;
}

Segment resize_storm(const Segment& substorm, double r, const GridGeometry& geom,
                     const MaskArray& mask) {
    if (!(r > 0)) throw std::invalid_argument("resize_storm: factor must be > 0");
    Segment out;
    out.t = substorm.t;
    out.id = substorm.id;
    if (std::abs(r - 1.0) < 1e-12) {
        out.regions = substorm.regions;
        return out;
    }

    const auto [cx, cy] = substorm.centroid_xy();
    std::unordered_map<int64_t, float> value_of;
    double xmin = 1e18, xmax = -1e18, ymin = 1e18, ymax = -1e18;
    for (const Region& reg : substorm.regions) {
        for (size_t i = 0; i < reg.cells.size(); ++i) {
            value_of[cell_key(reg.cells[i])] = reg.values[i];
            xmin = std::min(xmin, double(reg.cells[i].x));
            xmax = std::max(xmax, double(reg.cells[i].x));
            ymin = std::min(ymin, double(reg.cells[i].y));
            ymax = std::max(ymax, double(reg.cells[i].y));
        }
    }

    // target cells live inside the source bounding box scaled about the center
    const int tx_lo = std::max(0, static_cast<int>(std::floor(cx + (xmin - cx) * r)) - 1);
    const int tx_hi = std::min(geom.nx - 1, static_cast<int>(std::ceil(cx + (xmax - cx) * r)) + 1);
    const int ty_lo = std::max(0, static_cast<int>(std::floor(cy + (ymin - cy) * r)) - 1);
    const int ty_hi = std::min(geom.ny - 1, static_cast<int>(std::ceil(cy + (ymax - cy) * r)) + 1);

    Region region;
    for (int y = ty_lo; y <= ty_hi; ++y) {
        for (int x = tx_lo; x <= tx_hi; ++x) {
            if (!mask(y, x)) continue;
            const int sx = static_cast<int>(std::llround(cx + (x - cx) / r));
            const int sy = static_cast<int>(std::llround(cy + (y - cy) / r));
            const auto it = value_of.find(cell_key(sx, sy));
            if (it == value_of.end()) continue;
            region.cells.push_back({x, y});
            region.values.push_back(it->second);
        }
    }
    if (!region.cells.empty()) out.regions.push_back(std::move(region));
    return out;
}

SimResult resize_field(const GridField& field, const std::vector<StormEvent>& events,
                       const MetricMap& resize_map, const ResizeOptions& options) {
    SimResult res;
    res.field = options.keep_background ? field : GridField::zeros_like(field);

    // group segments by timestep, deterministic order (event id, segment id)
    std::vector<std::vector<const Segment*>> by_t(static_cast<size_t>(field.nt()));
    for (const StormEvent& ev : events)
        for (const auto& segs : ev.steps)
            for (const Segment& s : segs) by_t[static_cast<size_t>(s.t)].push_back(&s);

    if (options.keep_background) {
        for (int t = 0; t < field.nt(); ++t)
            for (const Segment* s : by_t[static_cast<size_t>(t)])
                for (const Region& r : s->regions)
                    for (const Cell& c : r.cells)
                        res.field.steps[static_cast<size_t>(t)](c.y, c.x) = 0.0f;
    }

    for (int t = 0; t < field.nt(); ++t) {
        auto& slice = res.field.steps[static_cast<size_t>(t)];
        std::unordered_set<int64_t> placed;
        int overlaps = 0;
        for (const Segment* seg : by_t[static_cast<size_t>(t)]) {
            for (const Segment& sub : split_substorms(*seg, options.gap_km, field.geom,
                                                      options.connectivity)) {
                const auto [cx, cy] = sub.centroid_xy();
                const LatLon center = field.geom.cell_latlon(cx, cy);
                auto [mx, my] = resize_map.geom.nearest_cell(center);
                mx = std::clamp(mx, 0, resize_map.geom.nx - 1);
                my = std::clamp(my, 0, resize_map.geom.ny - 1);
                double r = resize_map.values(my, mx);
                if (!std::isfinite(r) || r <= 0.0) {
                    res.log.push_back({"resize_factor_missing", t, mx, my, -1, 0, r});
                    r = 1.0;
                }
                const Segment resized = resize_storm(sub, r, field.geom, field.mask);
                if (resized.cell_count() == 0) {
                    res.log.push_back({"storm_removed", t, static_cast<int>(std::lround(cx)),
                                       static_cast<int>(std::lround(cy)), -1, sub.cell_count(), r});
                    continue;
                }
                for (const Region& reg : resized.regions) {
                    for (size_t i = 0; i < reg.cells.size(); ++i) {
                        const Cell& c = reg.cells[i];
                        if (!placed.insert(cell_key(c)).second) ++overlaps;
                        slice(c.y, c.x) = std::max(slice(c.y, c.x), reg.values[i]);
                    }
                }
            }
        }
        if (overlaps > 0) res.log.push_back({"overlap", t, -1, -1, -1, overlaps, 0.0});
    }
    return res;
}

QuantileTransfer build_quantile_transfer(const GridField& baseline_resized,
                                         const GridField& future, int quantile_count,
                                         int threads) {
    if (!(baseline_resized.geom == future.geom))
        throw std::invalid_argument("build_quantile_transfer: fields on different grids");
    if (quantile_count < 2)
        throw std::invalid_argument("build_quantile_transfer: need at least 2 quantile levels");
    QuantileTransfer tr;
    tr.geom = baseline_resized.geom;
    tr.quantile_count = quantile_count;
    tr.cells.assign(static_cast<size_t>(tr.geom.nx) * tr.geom.ny, {});

    const int ncells = tr.geom.nx * tr.geom.ny;
    parallel_for(ncells, threads, [&](int idx) {
        const int x = idx % tr.geom.nx, y = idx / tr.geom.nx;
        if (!baseline_resized.mask(y, x) || !future.mask(y, x)) return;
        std::vector<float> bs(static_cast<size_t>(baseline_resized.nt()));
        std::vector<float> fs(static_cast<size_t>(future.nt()));
        for (int t = 0; t < baseline_resized.nt(); ++t)
            bs[static_cast<size_t>(t)] = baseline_resized.steps[static_cast<size_t>(t)](y, x);
        for (int t = 0; t < future.nt(); ++t)
            fs[static_cast<size_t>(t)] = future.steps[static_cast<size_t>(t)](y, x);
        tr.cells[static_cast<size_t>(idx)] = build_cell_transfer(bs, fs, quantile_count);
    });
    return tr;
}

std::vector<float> apply_quantile_transfer(const std::vector<float>& series,
                                           const CellTransfer& tr,
                                           const std::vector<std::vector<float>>& spatial_neighbors,
                                           uint64_t seed, std::vector<SimLogEntry>* log, int log_x,
                                           int log_y) {
    if (!tr.valid) return series;
    const int nt = static_cast<int>(series.size());
    std::vector<float> out = series;
    const std::vector<float> original = series;  // pre-adjustment, for p-levels and neighbors
    const std::vector<float> pos = positive_sorted(series);
    const int64_t n_wet = static_cast<int64_t>(pos.size());

    // --- step 1: wet-count change ---
    int64_t target = n_wet;
    if (tr.w_b > 0.0) {
        target = std::clamp<int64_t>(std::llround(double(n_wet) * tr.w_f / tr.w_b), 0, nt);
    } else if (tr.promote_only) {
        // no baseline wet steps to scale from; adopt the future wet fraction
        target = std::max<int64_t>(n_wet, std::clamp<int64_t>(std::llround(tr.w_f * nt), 0, nt));
        if (log) log->push_back({"promote_only_cell", -1, log_x, log_y, -1, 0, tr.w_f});
    }

    if (target < n_wet) {
        // demote the lowest intensities to zero; ties resolved by time
        std::vector<std::pair<float, int>> wet;
        for (int t = 0; t < nt; ++t)
            if (out[static_cast<size_t>(t)] > 0.0f) wet.push_back({out[static_cast<size_t>(t)], t});
        std::sort(wet.begin(), wet.end());
        for (int64_t k = 0; k < n_wet - target; ++k)
            out[static_cast<size_t>(wet[static_cast<size_t>(k)].second)] = 0.0f;
    } else if (target > n_wet) {
        // promote dry steps: spatially supported steps first, ranked by the
        // strongest in-mask 8-neighbor at the same timestep, then temporally
        // supported steps (t-1, t+1); seeded shuffle breaks rank ties
        struct Candidate {
            int tier;       // 0 spatial, 1 temporal
            double key;     // descending
            uint64_t tie;
            int t;
            float value;    // mean of the positive neighbor values used
        };
        std::vector<Candidate> cands;
        for (int t = 0; t < nt; ++t) {
            if (original[static_cast<size_t>(t)] > 0.0f) continue;
            double best = 0.0, sum = 0.0;
            int n_pos = 0;
            for (const auto& nb : spatial_neighbors) {
                const float v = nb[static_cast<size_t>(t)];
                if (v > 0.0f) {
                    best = std::max(best, double(v));
                    sum += v;
                    ++n_pos;
                }
            }
            if (n_pos > 0) {
                cands.push_back({0, best, splitmix64(seed ^ uint64_t(t)), t,
                                 static_cast<float>(sum / n_pos)});
                continue;
            }
            best = 0.0;
            sum = 0.0;
            n_pos = 0;
            for (int dt : {-1, +1}) {
                const int tt = t + dt;
                if (tt < 0 || tt >= nt) continue;
                const float v = original[static_cast<size_t>(tt)];
                if (v > 0.0f) {
                    best = std::max(best, double(v));
                    sum += v;
                    ++n_pos;
                }
            }
            if (n_pos > 0)
                cands.push_back({1, best, splitmix64(seed ^ uint64_t(t)), t,
                                 static_cast<float>(sum / n_pos)});
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            if (a.tier != b.tier) return a.tier < b.tier;
            if (a.key != b.key) return a.key > b.key;
            if (a.tie != b.tie) return a.tie < b.tie;
            return a.t < b.t;
        });
        const int64_t want = target - n_wet;
        const int64_t got = std::min<int64_t>(want, static_cast<int64_t>(cands.size()));
        for (int64_t k = 0; k < got; ++k)
            out[static_cast<size_t>(cands[static_cast<size_t>(k)].t)] =
                cands[static_cast<size_t>(k)].value;
        if (got < want && log)
            log->push_back(
                {"promotion_shortfall", -1, log_x, log_y, -1, static_cast<int>(want - got), 0.0});
    }

    // --- step 2: quantile-ratio rescaling of the remaining positives ---
    if (tr.q_b.empty()) return out;  // promote-only or all-demote: values pass through
    const int Q = static_cast<int>(tr.q_b.size());
    for (int t = 0; t < nt; ++t) {
        const float x = out[static_cast<size_t>(t)];
        if (x <= 0.0f) continue;
        const double p = pos.empty() ? 0.5 : empirical_level(pos, x);
        out[static_cast<size_t>(t)] = static_cast<float>(double(x) * ratio_at(tr, p, Q));
    }
    return out;
}

SimResult apply_transfer_field(const GridField& field, const QuantileTransfer& transfer,
                               uint64_t seed, int threads) {
    SimResult res;
    res.field = GridField::zeros_like(field);
    const int nx = field.geom.nx, ny = field.geom.ny, nt = field.nt();

    std::vector<std::vector<SimLogEntry>> logs(static_cast<size_t>(nx) * ny);
    parallel_for(nx * ny, threads, [&](int idx) {
        const int x = idx % nx, y = idx / nx;
        if (!field.mask(y, x)) return;

        std::vector<float> series(static_cast<size_t>(nt));
        for (int t = 0; t < nt; ++t)
            series[static_cast<size_t>(t)] = field.steps[static_cast<size_t>(t)](y, x);

        // transfer of the closest model grid cell
        const LatLon loc = field.geom.cell_latlon(x, y);
        auto [mx, my] = transfer.geom.nearest_cell(loc);
        mx = std::clamp(mx, 0, transfer.geom.nx - 1);
        my = std::clamp(my, 0, transfer.geom.ny - 1);
        const CellTransfer& tr = transfer.at(mx, my);

        std::vector<std::vector<float>> neighbors;
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const int px = x + dx, py = y + dy;
                if (px < 0 || px >= nx || py < 0 || py >= ny || !field.mask(py, px)) continue;
                std::vector<float> nb(static_cast<size_t>(nt));
                for (int t = 0; t < nt; ++t)
                    nb[static_cast<size_t>(t)] = field.steps[static_cast<size_t>(t)](py, px);
                neighbors.push_back(std::move(nb));
            }
        }

        const uint64_t cell_seed = splitmix64(seed ^ splitmix64(uint64_t(idx) + 1));
        const std::vector<float> adjusted = apply_quantile_transfer(
            series, tr, neighbors, cell_seed, &logs[static_cast<size_t>(idx)], x, y);
        for (int t = 0; t < nt; ++t)
            res.field.steps[static_cast<size_t>(t)](y, x) = adjusted[static_cast<size_t>(t)];
    });

    for (auto& lg : logs)
        for (SimLogEntry& e : lg) res.log.push_back(std::move(e));
    return res;
}

namespace {

std::vector<StormEvent> identify_and_track(const GridField& field, const SimParams& params) {
    const auto segs = identify_all(field, params.ident, params.threads);
    return track(segs, params.track, field.geom);
}

}  // namespace

SimResult simulate_future(const GridField& obs, const GridField& baseline, const GridField& future,
                          const SimParams& params) {
    if (!(baseline.geom == future.geom))
        throw std::invalid_argument("simulate_future: model fields on different grids");

    // storm sets for statistics are trimmed; every identified storm is resized
    const std::vector<StormEvent> obs_events = identify_and_track(obs, params);
    const std::vector<StormEvent> base_events = identify_and_track(baseline, params);
    const std::vector<StormEvent> fut_events = identify_and_track(future, params);

    const std::vector<StormEvent> base_trim =
        trim_negligible(base_events, baseline.geom, params.trim_fraction);
    const std::vector<StormEvent> fut_trim =
        trim_negligible(fut_events, future.geom, params.trim_fraction);
    const std::vector<StormMetrics> base_metrics =
        compute_all_metrics(base_trim, baseline.geom, params.threads);
    const std::vector<StormMetrics> fut_metrics =
        compute_all_metrics(fut_trim, future.geom, params.threads);

    const MetricMap rmap = build_resize_map(base_metrics, fut_metrics, baseline.geom,
                                            baseline.mask, params.kernel, params.threads);

    ResizeOptions ropt;
    ropt.gap_km = params.substorm_gap_km;
    ropt.connectivity = params.ident.connectivity;
    ropt.keep_background = true;  // unidentified precipitation passes through

    SimResult obs_resized = resize_field(obs, obs_events, rmap, ropt);
    SimResult base_resized = resize_field(baseline, base_events, rmap, ropt);

    const QuantileTransfer transfer = build_quantile_transfer(
        base_resized.field, future, params.quantile_count, params.threads);

    SimResult out = apply_transfer_field(obs_resized.field, transfer, params.seed, params.threads);
    // keep the resize-stage log entries ahead of the transfer-stage ones
    std::vector<SimLogEntry> log = std::move(obs_resized.log);
    for (SimLogEntry& e : out.log) log.push_back(std::move(e));
    out.log = std::move(log);
    return out;
}

SimResult gridcellwise_simulate(const GridField& obs, const GridField& baseline,
                                const GridField& future, const SimParams& params) {
    if (!(baseline.geom == future.geom))
        throw std::invalid_argument("gridcellwise_simulate: model fields on different grids");
    const QuantileTransfer transfer =
        build_quantile_transfer(baseline, future, params.quantile_count, params.threads);
    return apply_transfer_field(obs, transfer, params.seed, params.threads);
}

}  // namespace rainstorm
