#include "rainstorm/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include "rainstorm/parallel.hpp"

namespace rainstorm {

namespace {

// Sufficient statistics of one event for factorization.
struct EventStat {
    double sum_as = 0.0;   // sum over steps of a(S_i,t)*s(S_i,t) = sum of all values
    double sum_s = 0.0;    // sum over steps of s(S_i,t)
    double l = 0.0;        // step count
    double weight = 1.0;   // region assignment weight
};

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double event_weight(const StormEvent& ev, const GridGeometry& geom, const RegionFilter& region) {
    if (region.mask == nullptr) return 1.0;
    const MaskArray& m = *region.mask;
    if (region.assignment == RegionAssignment::kInitiationPoint) {
        // full membership iff the first central location falls in the region
        std::vector<LatLon> pts;
        std::vector<double> wts;
        for (const Segment& s : ev.steps.front()) {
            for (const Region& r : s.regions) {
                for (size_t i = 0; i < r.cells.size(); ++i) {
                    pts.push_back(geom.cell_latlon(r.cells[i].x, r.cells[i].y));
                    wts.push_back(r.values[i]);
                }
            }
        }
        const LatLon c1 = spherical_weighted_mean(pts, wts);
        const auto [ix, iy] = geom.nearest_cell(c1);
        return (geom.contains(ix, iy) && m(iy, ix)) ? 1.0 : 0.0;
    }
    double inside = 0.0, total = 0.0;
    for (const auto& segs : ev.steps) {
        for (const Segment& s : segs) {
            for (const Region& r : s.regions) {
                for (size_t i = 0; i < r.cells.size(); ++i) {
                    total += r.values[i];
                    if (m(r.cells[i].y, r.cells[i].x)) inside += r.values[i];
                }
            }
        }
    }
    return total > 0 ? inside / total : 0.0;
}

std::vector<EventStat> event_stats(const std::vector<StormEvent>& events,
                                   const GridGeometry& geom, const RegionFilter& region) {
    std::vector<EventStat> stats;
    stats.reserve(events.size());
    for (const StormEvent& ev : events) {
        EventStat st;
        st.weight = event_weight(ev, geom, region);
        if (st.weight <= 0.0) continue;
        for (const auto& segs : ev.steps) {
            for (const Segment& s : segs) {
                st.sum_as += s.total_mm();
                st.sum_s += s.cell_count();
            }
        }
        st.l = ev.l_steps();
        stats.push_back(st);
    }
    return stats;
}

FactorSummary factors_from_stats(const std::vector<EventStat>& stats, const GridGeometry& geom) {
    if (stats.empty()) throw std::invalid_argument("factorize: no events (empty summary)");
    double sum_as = 0.0, sum_s = 0.0, sum_l = 0.0, n = 0.0;
    for (const EventStat& st : stats) {
        sum_as += st.weight * st.sum_as;
        sum_s += st.weight * st.sum_s;
        sum_l += st.weight * st.l;
        n += st.weight;
    }
    FactorSummary f;
    f.avg_intensity_mm_per_hour = sum_as / sum_s / geom.dt_hours;
    f.size_factor_km2 = geom.cell_area_km2() * sum_s / sum_l;
    f.duration_factor_hours = geom.dt_hours * sum_l / n;
    f.n_storms = n;
    f.total_amount_mm_km2 = geom.cell_area_km2() * sum_as;
    return f;
}

FactorSummary resampled_factors(const std::vector<EventStat>& stats, std::mt19937_64& rng,
                                const GridGeometry& geom) {
    std::uniform_int_distribution<size_t> pick(0, stats.size() - 1);
    std::vector<EventStat> sample;
    sample.reserve(stats.size());
    for (size_t i = 0; i < stats.size(); ++i) sample.push_back(stats[pick(rng)]);
    return factors_from_stats(sample, geom);
}

double quantile_type7(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const size_t lo = static_cast<size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

const char* kFactorNames[] = {"total_amount", "intensity", "size", "duration", "number"};

std::array<double, 5> factor_values(const FactorSummary& s) {
    return {s.total_amount_mm_km2, s.avg_intensity_mm_per_hour, s.size_factor_km2,
            s.duration_factor_hours, s.n_storms};
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

const FactorDelta& FactorComparison::row(const std::string& factor) const {
    for (const FactorDelta& d : rows)
        if (d.factor == factor) return d;
    throw std::out_of_range("no such factor: " + factor);
}

StormMetrics compute_metrics(const StormEvent& event, const GridGeometry& geom) {
    StormMetrics m;
    m.event_id = event.id;
    m.l_steps = event.l_steps();
    m.duration_hours = m.l_steps * geom.dt_hours;
    m.size_cells.reserve(static_cast<size_t>(m.l_steps));
    for (const auto& segs : event.steps) {
        int s = 0;
        double amount = 0.0;
        std::vector<LatLon> pts;
        std::vector<double> wts;
        for (const Segment& seg : segs) {
            for (const Region& r : seg.regions) {
                for (size_t i = 0; i < r.cells.size(); ++i) {
                    pts.push_back(geom.cell_latlon(r.cells[i].x, r.cells[i].y));
                    wts.push_back(r.values[i]);
                    amount += r.values[i];
                }
                s += r.cell_count();
            }
        }
        m.size_cells.push_back(s);
        m.mean_intensity_mm_per_step.push_back(amount / s);
        m.central_locations.push_back(spherical_weighted_mean(pts, wts));
        m.total_amount_mm_km2 += geom.cell_area_km2() * amount;
    }
    return m;
}

std::vector<StormMetrics> compute_all_metrics(const std::vector<StormEvent>& events,
                                              const GridGeometry& geom, int threads) {
    std::vector<StormMetrics> out(events.size());
    parallel_for(static_cast<int>(events.size()), threads, [&](int i) {
        out[static_cast<size_t>(i)] = compute_metrics(events[static_cast<size_t>(i)], geom);
    });
    return out;
}

std::vector<StormEvent> trim_negligible(const std::vector<StormEvent>& events,
                                        const GridGeometry& geom, double fraction) {
    if (fraction < 0 || fraction > 1)
        throw std::invalid_argument("trim_negligible: fraction must be in [0,1]");
    std::vector<std::pair<double, size_t>> totals;  // (amount, index)
    totals.reserve(events.size());
    double grand = 0.0;
    for (size_t i = 0; i < events.size(); ++i) {
        const double amount = geom.cell_area_km2() * events[i].total_mm();
        totals.emplace_back(amount, i);
        grand += amount;
    }
    std::sort(totals.begin(), totals.end());

    std::vector<bool> removed(events.size(), false);
    double cum = 0.0;
    for (const auto& [amount, idx] : totals) {
        if (cum + amount > fraction * grand) break;
        cum += amount;
        removed[idx] = true;
    }
    std::vector<StormEvent> kept;
    kept.reserve(events.size());
    for (size_t i = 0; i < events.size(); ++i)
        if (!removed[i]) kept.push_back(events[i]);
    return kept;
}

FactorSummary factorize(const std::vector<StormEvent>& events, const GridGeometry& geom,
                        const RegionFilter& region) {
    return factors_from_stats(event_stats(events, geom, region), geom);
}

FactorComparison compare_factors(const FactorSummary& a, const FactorSummary& b,
                                 std::optional<double> delta_T_K) {
    const auto va = factor_values(a), vb = factor_values(b);
    FactorComparison cmp;
    for (size_t i = 0; i < va.size(); ++i) {
        if (va[i] == 0.0)
            throw std::domain_error(std::string("compare_factors: zero baseline for ") +
                                    kFactorNames[i]);
        FactorDelta d;
        d.factor = kFactorNames[i];
        d.baseline = va[i];
        d.comparison = vb[i];
        d.pct_diff = 100.0 * (vb[i] - va[i]) / va[i];
        if (delta_T_K) d.pct_per_kelvin = d.pct_diff / *delta_T_K;
        cmp.rows.push_back(d);
    }
    return cmp;
}

FactorComparison bootstrap_ci(const std::vector<StormEvent>& events_a,
                              const std::vector<StormEvent>& events_b, const GridGeometry& geom_a,
                              const GridGeometry& geom_b, const BootstrapParams& params,
                              std::optional<double> delta_T_K, const RegionFilter& region_a,
                              const RegionFilter& region_b) {
    if (params.n_boot < 2) throw std::invalid_argument("bootstrap_ci: n_boot must be >= 2");
    if (!(params.level > 0 && params.level < 1))
        throw std::invalid_argument("bootstrap_ci: level must be in (0,1)");
    const std::vector<EventStat> stats_a = event_stats(events_a, geom_a, region_a);
    const std::vector<EventStat> stats_b = event_stats(events_b, geom_b, region_b);
    if (stats_a.empty() || stats_b.empty())
        throw std::invalid_argument("bootstrap_ci: empty event set");

    FactorComparison cmp =
        compare_factors(factors_from_stats(stats_a, geom_a), factors_from_stats(stats_b, geom_b),
                        delta_T_K);

    std::vector<std::array<double, 5>> deltas(static_cast<size_t>(params.n_boot));
    parallel_for(params.n_boot, params.threads, [&](int r) {
        std::mt19937_64 rng(splitmix64(params.seed ^ splitmix64(static_cast<uint64_t>(r) + 1)));
        const auto fa = factor_values(resampled_factors(stats_a, rng, geom_a));
        const auto fb = factor_values(resampled_factors(stats_b, rng, geom_b));
        for (size_t i = 0; i < fa.size(); ++i)
            deltas[static_cast<size_t>(r)][i] = 100.0 * (fb[i] - fa[i]) / fa[i];
    });

    const double alpha = (1.0 - params.level) / 2.0;
    for (size_t i = 0; i < cmp.rows.size(); ++i) {
        std::vector<double> d(deltas.size());
        for (size_t r = 0; r < deltas.size(); ++r) d[r] = deltas[r][i];
        cmp.rows[i].ci_lo = quantile_type7(d, alpha);
        cmp.rows[i].ci_hi = quantile_type7(d, 1.0 - alpha);
    }
    return cmp;
}

void write_summary_csv(const std::filesystem::path& path, const FactorSummary& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "factor,value\n";
    out << "avg_intensity_mm_per_hour," << num(s.avg_intensity_mm_per_hour) << '\n';
    out << "size_factor_km2," << num(s.size_factor_km2) << '\n';
    out << "duration_factor_hours," << num(s.duration_factor_hours) << '\n';
    out << "n_storms," << num(s.n_storms) << '\n';
    out << "total_amount_mm_km2," << num(s.total_amount_mm_km2) << '\n';
    out << "region_id," << s.region_id << '\n';
    out << "season_id," << s.season_id << '\n';
}

void write_comparison_csv(const std::filesystem::path& path, const FactorComparison& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "factor,baseline,comparison,pct_diff,pct_per_K,ci_lo,ci_hi\n";
    for (const FactorDelta& d : c.rows) {
        out << d.factor << ',' << num(d.baseline) << ',' << num(d.comparison) << ','
            << num(d.pct_diff) << ',';
        if (d.pct_per_kelvin) out << num(*d.pct_per_kelvin);
        out << ',';
        if (d.ci_lo) out << num(*d.ci_lo);
        out << ',';
        if (d.ci_hi) out << num(*d.ci_hi);
        out << '\n';
    }
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<StormMetrics>& metrics,
                       const GridGeometry& geom) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "event_id,l_steps,duration_hours,total_amount_mm_km2,mean_size_km2,"
           "mean_intensity_mm_per_hour,first_lat,first_lon\n";
    for (const StormMetrics& m : metrics) {
        double mean_size = 0.0, sum_as = 0.0, sum_s = 0.0;
        for (size_t t = 0; t < m.size_cells.size(); ++t) {
            mean_size += m.size_cells[t];
            sum_as += m.mean_intensity_mm_per_step[t] * m.size_cells[t];
            sum_s += m.size_cells[t];
        }
        mean_size *= geom.cell_area_km2() / static_cast<double>(m.l_steps);
        const double mean_intensity = sum_as / sum_s / geom.dt_hours;
        out << m.event_id << ',' << m.l_steps << ',' << num(m.duration_hours) << ','
            << num(m.total_amount_mm_km2) << ',' << num(mean_size) << ',' << num(mean_intensity)
            << ',' << num(m.central_locations.front().lat) << ','
            << num(m.central_locations.front().lon) << '\n';
    }
}

}  // namespace rainstorm
