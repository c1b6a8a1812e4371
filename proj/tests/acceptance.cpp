// Acceptance suite: runs every acceptance criterion end to end and prints
// one PASS/FAIL line per criterion. Exits nonzero if any criterion fails.
//
// usage: acceptance <path-to-rainstorm-cli>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "rainstorm/evaluate.hpp"
#include "rainstorm/simulate.hpp"
#include "rainstorm/synth.hpp"

using namespace rainstorm;
namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_work;

struct Check {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& why) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += why;
        }
    }
};

GridGeometry geom12(int nx, int ny) {
    GridGeometry g;
    g.nx = nx;
    g.ny = ny;
    g.dx_km = 12;
    g.dy_km = 12;
    g.dt_hours = 3;
    g.lat0 = 35;
    g.lon0 = -100;
    return g;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int run_cli(const std::string& args) {
    const std::string cmd = g_cli + " " + args + " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------- criterion 1: factorization identity ----------
Check criterion_factorization() {
    Check c;
    const GridGeometry geom = geom12(64, 64);
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> u(0, 1);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<StormEvent> events;
        const int n = 5 + static_cast<int>(u(rng) * 45);
        for (int i = 0; i < n; ++i) {
            StormEvent ev;
            ev.id = i;
            ev.birth_t = static_cast<int>(u(rng) * 10);
            const int l = 1 + static_cast<int>(u(rng) * 6);
            ev.death_t = ev.birth_t + l - 1;
            for (int k = 0; k < l; ++k) {
                Segment s;
                s.t = ev.birth_t + k;
                Region r;
                const int w = 1 + static_cast<int>(u(rng) * 5);
                const int bx = static_cast<int>(u(rng) * 50), by = static_cast<int>(u(rng) * 50);
                for (int dy = 0; dy < w; ++dy)
                    for (int dx = 0; dx < w; ++dx) {
                        r.cells.push_back({bx + dx, by + dy});
                        r.values.push_back(static_cast<float>(0.11 + 9.0 * u(rng)));
                    }
                s.regions.push_back(std::move(r));
                ev.steps.push_back({std::move(s)});
            }
            events.push_back(std::move(ev));
        }
        const FactorSummary f = factorize(events, geom);
        double sum_values = 0.0;
        for (const StormEvent& ev : events) sum_values += ev.total_mm();
        const double oracle = geom.cell_area_km2() * sum_values;
        const double product = f.avg_intensity_mm_per_hour * f.size_factor_km2 *
                               f.duration_factor_hours * f.n_storms;
        c.require(std::abs(product - oracle) <= 1e-9 * oracle,
                  "identity off at rep " + std::to_string(rep) + " rel " +
                      fmt("%.3g", std::abs(product - oracle) / oracle));
        if (!c.pass) break;
    }
    return c;
}

// ---------- criterion 2: segmentation oracle ----------
void oracle_fill(const Eigen::ArrayXXf& g, int conn, int x, int y,
                 std::vector<std::vector<int>>& label, int id, double thr) {
    const int ny = static_cast<int>(g.rows()), nx = static_cast<int>(g.cols());
    if (x < 0 || x >= nx || y < 0 || y >= ny) return;
    if (label[y][x] >= 0 || !(g(y, x) > thr)) return;
    label[y][x] = id;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (conn == 4 && dx != 0 && dy != 0) continue;
            oracle_fill(g, conn, x + dx, y + dy, label, id, thr);
        }
}

Check criterion_segmentation_oracle() {
    Check c;
    const MaskArray mask = MaskArray::Constant(50, 50, true);
    std::mt19937_64 rng(2002);
    std::uniform_real_distribution<double> u(0, 1);
    IdentParams p;
    for (int rep = 0; rep < 1000 && c.pass; ++rep) {
        Eigen::ArrayXXf s = Eigen::ArrayXXf::Zero(50, 50);
        const double wet = 0.15 + 0.5 * u(rng);
        for (int y = 0; y < 50; ++y)
            for (int x = 0; x < 50; ++x)
                if (u(rng) < wet) s(y, x) = static_cast<float>(0.2 + 5 * u(rng));
        for (int conn : {4, 8}) {
            p.connectivity = conn;
            const auto regions = connected_regions(s, mask, p);
            std::vector<std::vector<int>> label(50, std::vector<int>(50, -1));
            int next = 0;
            for (int y = 0; y < 50; ++y)
                for (int x = 0; x < 50; ++x)
                    if (label[y][x] < 0 && s(y, x) > p.wet_threshold_mm_per_step)
                        oracle_fill(s, conn, x, y, label, next++, p.wet_threshold_mm_per_step);

            std::set<std::set<std::pair<int, int>>> got, want;
            for (const Region& r : regions) {
                std::set<std::pair<int, int>> cs;
                for (const Cell& cell : r.cells) cs.insert({cell.x, cell.y});
                got.insert(std::move(cs));
            }
            std::vector<std::set<std::pair<int, int>>> sets(next);
            for (int y = 0; y < 50; ++y)
                for (int x = 0; x < 50; ++x)
                    if (label[y][x] >= 0) sets[label[y][x]].insert({x, y});
            want.insert(sets.begin(), sets.end());
            c.require(got == want, "mismatch at rep " + std::to_string(rep) + " conn " +
                                       std::to_string(conn));
        }
    }
    return c;
}

// ---------- criterion 3: chaining regression ----------
Check criterion_chaining() {
    Check c;
    const GridGeometry geom = geom12(40, 20);
    const MaskArray mask = MaskArray::Constant(20, 40, true);
    Eigen::ArrayXXf s = Eigen::ArrayXXf::Zero(20, 40);
    for (int y = 0; y <= 9; ++y)
        for (int x = 0; x <= 9; ++x) s(y, x) = 3.0f;
    for (int y = 0; y <= 9; ++y)
        for (int x = 15; x <= 24; ++x) s(y, x) = 3.0f;
    s(4, 11) = 0.5f;  // bridge between the blobs

    IdentParams p;
    const auto regions = connected_regions(s, mask, p);
    const auto naive = almost_connected_label(regions, p.dilation_radius_km, geom);
    const auto staged = identify_segments(s, mask, p, geom);
    c.require(naive.size() == 1,
              "naive labeling gave " + std::to_string(naive.size()) + " segments, wanted 1");
    c.require(staged.size() == 2,
              "four-stage gave " + std::to_string(staged.size()) + " segments, wanted 2");
    return c;
}

// ---------- criterion 4: tracking ground truth ----------
Check criterion_tracking_truth() {
    Check c;
    const GridGeometry geom = geom12(90, 90);
    int64_t total = 0, correct_total = 0;
    for (int scen = 0; scen < 50; ++scen) {
        const SynthSpec spec = random_scenario(geom, 30, 4000 + scen);
        SynthTruth truth;
        const GridField field = render_synth(spec, &truth);
        const auto events = track(identify_all(field, IdentParams{}, 2), TrackParams{}, geom);
        const double acc = tracking_accuracy(events, truth);
        int64_t n = 0;
        for (const StormEvent& ev : events)
            for (const auto& segs : ev.steps) n += static_cast<int64_t>(segs.size());
        total += n;
        correct_total += static_cast<int64_t>(std::llround(acc * n));
    }
    const double rate = double(correct_total) / double(total);
    c.require(rate >= 0.95, "aggregate segment assignment rate " + fmt("%.4f", rate) + " < 0.95");
    c.detail = "assignment rate " + fmt("%.4f", rate);
    return c;
}

// ---------- criterion 5: table arithmetic reproduction ----------
Check criterion_table_arithmetic() {
    Check c;
    FactorSummary obs, model;
    obs.avg_intensity_mm_per_hour = 3.8;
    obs.size_factor_km2 = 3.4e4;
    obs.duration_factor_hours = 10.9;
    obs.n_storms = 1.5;
    obs.total_amount_mm_km2 = 3.8 * 3.4e4 * 10.9 * 1.5;
    model.avg_intensity_mm_per_hour = 2.6;
    model.size_factor_km2 = 5.3e4;
    model.duration_factor_hours = 9.7;
    model.n_storms = 1.6;
    model.total_amount_mm_km2 = 2.6 * 5.3e4 * 9.7 * 1.6;
    const FactorComparison cmp = compare_factors(obs, model);

    const struct {
        const char* factor;
        double printed;
    } rows[] = {{"intensity", -33.0}, {"size", 51.0}, {"duration", -11.0}, {"number", 5.1}};
    for (const auto& row : rows) {
        const double got = cmp.row(row.factor).pct_diff;
        c.require(std::abs(got - row.printed) <= 2.0,
                  std::string(row.factor) + " computed " + fmt("%.2f", got) + " vs printed " +
                      fmt("%.1f", row.printed) + " (off by " +
                      fmt("%.2f", std::abs(got - row.printed)) + " pp)");
    }

    FactorSummary a, b;
    a.avg_intensity_mm_per_hour = 2.4;
    a.size_factor_km2 = a.duration_factor_hours = a.n_storms = 1.0;
    a.total_amount_mm_km2 = 2.4;
    b = a;
    b.avg_intensity_mm_per_hour = 3.1;
    b.total_amount_mm_km2 = 3.1;
    const FactorComparison norm = compare_factors(a, b, 4.3);
    const double per_k = *norm.row("intensity").pct_per_kelvin;
    c.require(std::abs(per_k - 6.2) <= 0.7,
              "per-kelvin intensity " + fmt("%.2f", per_k) + " vs printed 6.2");
    return c;
}

// ---------- criterion 6: kernel normalization ----------
Check criterion_kernel_normalization() {
    Check c;
    const GridGeometry geom = geom12(48, 48);
    MaskArray mask = MaskArray::Constant(48, 48, true);
    mask.block(0, 0, 10, 10).setConstant(false);
    std::mt19937_64 rng(6006);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<StormMetrics> metrics;
    for (int i = 0; i < 23; ++i) {
        StormMetrics m;
        m.l_steps = 1;
        m.duration_hours = 3;
        m.size_cells = {10};
        m.mean_intensity_mm_per_step = {1.0};
        m.central_locations = {geom.cell_latlon(12 + u(rng) * 32, 12 + u(rng) * 32)};
        metrics.push_back(m);
    }
    for (double bw : {50.0, 200.0, 1000.0}) {
        KernelSpec k;
        k.bandwidth_km = bw;
        const MetricMap map = initiation_density(metrics, geom, mask, k);
        double sum = 0.0;
        for (int y = 0; y < geom.ny; ++y)
            for (int x = 0; x < geom.nx; ++x)
                if (mask(y, x)) sum += map.values(y, x);
        const double rel = std::abs(sum - 23.0) / 23.0;
        c.require(rel <= 1e-6,
                  "bandwidth " + fmt("%.0f", bw) + ": sum " + fmt("%.9f", sum) + " vs 23");
    }
    return c;
}

// ---------- criterion 7: simulation identity law ----------
Check criterion_identity_law() {
    Check c;
    const GridGeometry geom = geom12(56, 56);
    const SynthSpec spec = random_scenario(geom, 24, 7007);
    GridField obs = render_synth(spec);
    obs.steps[2](1, 1) = 0.07f;  // sub-threshold drizzle must survive
    obs.steps[9](50, 3) = 0.03f;

    SimParams p;
    p.seed = 7;
    p.threads = 2;
    const SimResult storm = simulate_future(obs, obs, obs, p);
    const SimResult cell = gridcellwise_simulate(obs, obs, obs, p);
    for (int t = 0; t < obs.nt() && c.pass; ++t) {
        c.require((storm.field.steps[t] - obs.steps[t]).abs().maxCoeff() <= 1e-9,
                  "storm-based output differs at t=" + std::to_string(t));
        c.require((cell.field.steps[t] - obs.steps[t]).abs().maxCoeff() <= 1e-9,
                  "grid-cell-wise output differs at t=" + std::to_string(t));
        c.require(((storm.field.steps[t] > 0.0f) == (obs.steps[t] > 0.0f)).all(),
                  "wet/dry pattern changed at t=" + std::to_string(t));
        c.require(((cell.field.steps[t] > 0.0f) == (obs.steps[t] > 0.0f)).all(),
                  "grid-cell-wise wet/dry pattern changed at t=" + std::to_string(t));
    }
    return c;
}

// ---------- criterion 8: composed scaling ----------
Check criterion_composed_scaling() {
    Check c;
    const GridGeometry geom = geom12(80, 80);
    const int nt = 6;
    auto disk = [&](double radius, float value) {
        GridField f = GridField::zeros(geom, nt);
        for (auto& s : f.steps)
            for (int y = 0; y < geom.ny; ++y)
                for (int x = 0; x < geom.nx; ++x)
                    if ((x - 40.0) * (x - 40.0) + (y - 40.0) * (y - 40.0) <= radius * radius)
                        s(y, x) = value;
        return f;
    };
    const GridField baseline = disk(14.0, 2.0f);
    const GridField future = disk(14.0 * 0.8, 2.0f * 1.25f);  // r=0.8, ratio 1.25

    SimParams p;
    p.seed = 8;
    const SimResult out = simulate_future(baseline, baseline, future, p);
    const double expect = 0.8 * 0.8 * 1.25;
    const double got = out.field.total_mm() / baseline.total_mm();
    c.require(std::abs(got - expect) / expect <= 0.05,
              "total ratio " + fmt("%.4f", got) + " vs " + fmt("%.4f", expect));
    c.detail = "total ratio " + fmt("%.4f", got) + ", expected " + fmt("%.4f", expect);
    return c;
}

// ---------- criterion 9: self-simulation validation ----------
Check criterion_self_simulation() {
    Check c;
    const GridGeometry geom = geom12(80, 80);
    const int nt = 200;
    ScenarioParams sp;
    sp.n_storms = 70;
    sp.min_duration = 2;
    sp.max_duration = 7;
    SynthSpec base_spec = random_scenario(geom, nt, 9009, sp);
    SynthSpec fut_spec = base_spec;
    for (SynthStorm& st : fut_spec.storms) {
        st.radius_cells *= 0.72;  // engineered size shrink
        st.peak_mm *= 1.45;       // engineered intensity growth
    }
    const GridField baseline = render_synth(base_spec);
    const GridField future = render_synth(fut_spec);

    SimParams p;
    p.seed = 9;
    p.threads = 4;
    const SimResult storm = simulate_future(baseline, baseline, future, p);
    const SimResult cell = gridcellwise_simulate(baseline, baseline, future, p);

    std::vector<std::pair<std::string, MaskArray>> regions;
    for (int qy = 0; qy < 2; ++qy)
        for (int qx = 0; qx < 2; ++qx) {
            MaskArray m = MaskArray::Constant(geom.ny, geom.nx, false);
            for (int y = qy * 40; y < (qy + 1) * 40; ++y)
                for (int x = qx * 40; x < (qx + 1) * 40; ++x) m(y, x) = true;
            regions.emplace_back("q" + std::to_string(qy * 2 + qx), std::move(m));
        }

    const EvalTable table = evaluate_simulation(
        future,
        {{"baseline", &baseline}, {"gridcell", &cell.field}, {"storm", &storm.field}}, regions);

    std::string report;
    for (const auto& [name, mask] : regions) {
        const double kl_base = table.kl(name, "baseline");
        const double kl_cell = table.kl(name, "gridcell");
        const double kl_storm = table.kl(name, "storm");
        report += name + ": i=" + fmt("%.4f", kl_base) + " ii=" + fmt("%.4f", kl_cell) +
                  " iii=" + fmt("%.4f", kl_storm) + "  ";
        c.require(kl_storm < kl_base,
                  name + ": storm KL " + fmt("%.4f", kl_storm) + " not below baseline KL " +
                      fmt("%.4f", kl_base));
        c.require(kl_storm <= kl_cell, name + ": storm KL " + fmt("%.4f", kl_storm) +
                                           " above grid-cell KL " + fmt("%.4f", kl_cell));
    }
    if (c.pass) c.detail = report;
    return c;
}

// ---------- criterion 10: KL properties ----------
Check criterion_kl_properties() {
    Check c;
    DrySpellHistogram p, q;
    p.counts = {17, 4, 9, 1};
    c.require(kl_divergence(p, p) == 0.0, "KL(p,p) != 0 exactly");

    p.counts = {50, 50};
    q.counts = {90, 10};
    const double hand = kl_divergence(p, q);
    c.require(std::abs(hand - 0.5108) <= 1e-3,
              "hand case gave " + fmt("%.5f", hand) + " vs 0.5108");

    std::mt19937_64 rng(1010);
    std::uniform_int_distribution<int64_t> cnt(0, 300);
    for (int rep = 0; rep < 1000 && c.pass; ++rep) {
        DrySpellHistogram a, b;
        a.counts.resize(1 + rep % 15);
        b.counts.resize(1 + (rep * 3) % 15);
        int64_t sa = 0, sb = 0;
        for (auto& v : a.counts) sa += (v = cnt(rng));
        for (auto& v : b.counts) sb += (v = cnt(rng));
        if (sa == 0 || sb == 0) continue;
        c.require(kl_divergence(a, b) >= 0.0, "negative KL at rep " + std::to_string(rep));
    }
    return c;
}

// ---------- criterion 11: determinism across repeats and thread counts ----------
Check criterion_determinism() {
    Check c;
    const fs::path base = g_work / "det";
    fs::create_directories(base);

    // fixtures shared by all runs
    const fs::path fx = base / "fixtures";
    fs::create_directories(fx);
    if (run_cli("synth --seed 31 --nx 56 --ny 56 --nt 14 --n-storms 8 --out-dir " + fx.string()) !=
        0) {
        c.require(false, "fixture synth A failed");
        return c;
    }
    fs::rename(fx / "synth.pgrid", fx / "a.pgrid");
    if (run_cli("synth --seed 32 --nx 56 --ny 56 --nt 14 --n-storms 7 --out-dir " + fx.string()) !=
        0) {
        c.require(false, "fixture synth B failed");
        return c;
    }
    fs::rename(fx / "synth.pgrid", fx / "b.pgrid");
    run_cli("track --field " + (fx / "a.pgrid").string() + " --out-dir " + fx.string());
    fs::rename(fx / "events.jsonl", fx / "events_a.jsonl");
    run_cli("track --field " + (fx / "b.pgrid").string() + " --out-dir " + fx.string());
    fs::rename(fx / "events.jsonl", fx / "events_b.jsonl");
    {
        GridField mask_field = GridField::zeros(geom12(56, 56), 1);
        mask_field.steps[0].setConstant(1.0f);
        save_field(mask_field, fx / "region_all.pgrid");
    }

    const std::string A = (fx / "a.pgrid").string();
    const std::string B = (fx / "b.pgrid").string();
    const std::string EA = (fx / "events_a.jsonl").string();
    const std::string EB = (fx / "events_b.jsonl").string();
    const std::string RM = (fx / "region_all.pgrid").string();

    struct Sub {
        std::string name;
        std::string args;  // without --out-dir/--threads
        std::vector<std::string> artifacts;
    };
    const std::vector<Sub> subs = {
        {"synth", "synth --seed 41 --nx 48 --ny 48 --nt 10 --n-storms 6",
         {"synth.pgrid", "truth.json", "manifest_synth.json"}},
        {"identify", "identify --field " + A, {"segments.jsonl", "manifest_identify.json"}},
        {"track", "track --field " + A,
         {"events.jsonl", "trajectories.csv", "manifest_track.json"}},
        {"metrics", "metrics --field " + A + " --events " + EA,
         {"metrics.csv", "manifest_metrics.json"}},
        {"factorize", "factorize --field " + A + " --events " + EA,
         {"factors.csv", "manifest_factorize.json"}},
        {"maps", "maps --field " + A + " --events " + EA + " --bandwidth-km 150",
         {"initiation_density.pgrid", "initiation_density.csv", "mean_size.pgrid",
          "mean_size.csv", "mean_duration.pgrid", "mean_duration.csv", "seasonal_mean.pgrid",
          "seasonal_mean.csv", "intensity.pgrid", "intensity.csv", "manifest_maps.json"}},
        {"compare",
         "compare --field-a " + A + " --events-a " + EA + " --field-b " + B + " --events-b " + EB +
             " --n-boot 250 --seed 51",
         {"comparison.csv", "manifest_compare.json"}},
        {"simulate", "simulate --obs " + A + " --baseline " + A + " --future " + B + " --seed 61",
         {"simulated.pgrid", "sim_log.jsonl", "manifest_simulate.json"}},
        {"evaluate",
         "evaluate --target " + B + " --candidate base=" + A + " --candidate alt=" + B +
             " --region all=" + RM,
         {"evaluation.csv", "evaluation_wide.csv", "manifest_evaluate.json"}},
    };

    for (const Sub& sub : subs) {
        std::vector<fs::path> dirs;
        int runi = 0;
        for (int threads : {1, 8, 1, 8}) {
            const fs::path dir = base / (sub.name + "_r" + std::to_string(runi++));
            fs::create_directories(dir);
            const int rc = run_cli(sub.args + " --threads " + std::to_string(threads) +
                                   " --out-dir " + dir.string());
            if (rc != 0) {
                c.require(false, sub.name + " exited " + std::to_string(rc));
                return c;
            }
            dirs.push_back(dir);
        }
        for (const std::string& artifact : sub.artifacts) {
            const std::string ref = read_bytes(dirs[0] / artifact);
            c.require(!ref.empty() || artifact == "sim_log.jsonl",
                      sub.name + "/" + artifact + " missing or empty");
            for (size_t k = 1; k < dirs.size(); ++k) {
                if (read_bytes(dirs[k] / artifact) != ref) {
                    c.require(false, sub.name + "/" + artifact + " differs between runs");
                    break;
                }
            }
        }
    }
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <path-to-rainstorm-cli>\n");
        return 64;
    }
    g_cli = argv[1];
    g_work = fs::temp_directory_path() / "rainstorm_acceptance";
    fs::remove_all(g_work);
    fs::create_directories(g_work);

    const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
        {"factorization identity (100 random event sets, 1e-9 relative)", criterion_factorization},
        {"segmentation matches brute-force flood fill (1000 slices, both connectivities)",
         criterion_segmentation_oracle},
        {"chaining regression (two blobs + bridge: 2 staged vs 1 naive)", criterion_chaining},
        {"tracking recovers ground-truth schedules (>=95% over 50 scenarios)",
         criterion_tracking_truth},
        {"published factor-table arithmetic (differences +-2pp, per-kelvin +-0.7)",
         criterion_table_arithmetic},
        {"kernel normalization (density sums to N, 3 bandwidths, 1e-6)",
         criterion_kernel_normalization},
        {"simulation identity law (baseline=future returns obs, 1e-9 + wet/dry)",
         criterion_identity_law},
        {"composed scaling (r=0.8, ratio 1.25 -> total x0.8^2x1.25 +-5%)",
         criterion_composed_scaling},
        {"self-simulation beats baseline everywhere and grid-cell-wise in size-driven regions",
         criterion_self_simulation},
        {"KL properties (exact zero, hand value, nonnegativity)", criterion_kl_properties},
        {"byte-identical artifacts across repeats and thread counts 1/8", criterion_determinism},
    };

    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        try {
            c = criteria[i].second();
        } catch (const std::exception& e) {
            c.pass = false;
            c.detail = std::string("exception: ") + e.what();
        }
        std::printf("%s  criterion %2zu: %s%s%s\n", c.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first.c_str(), c.detail.empty() ? "" : " -- ",
                    c.detail.c_str());
        if (!c.pass) ++failures;
    }
    fs::remove_all(g_work);
    return failures;
}
