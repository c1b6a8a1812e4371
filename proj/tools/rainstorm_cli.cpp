// rainstorm: decompose gridded precipitation into storm events, quantify
// them, and build data-driven future simulations.
//
// Subcommands: synth, identify, track, metrics, factorize, maps, compare,
// simulate, evaluate. Every run writes its artifacts plus a manifest with
// all parameters and input hashes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <algorithm>
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rainstorm/evaluate.hpp"
#include "rainstorm/simulate.hpp"
#include "rainstorm/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rainstorm;

namespace {

constexpr const char* kVersion = "0.1.0";

uint64_t fnv1a64_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void require_input(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path)) {
        std::string msg = "input not found: " + path.string();
        if (!producer.empty()) msg += " (produce it with `rainstorm " + producer + "`)";
        throw std::runtime_error(msg);
    }
}

// Accumulates parameters and inputs for the run manifest. Thread count,
// output directory, and config path are execution details and stay out, so
// reruns with different parallelism give byte-identical artifacts.
struct Manifest {
    std::string subcommand;
    json parameters = json::object();
    json inputs = json::object();
    std::vector<std::string> outputs;

    void input(const fs::path& p) { inputs[p.string()] = hex64(fnv1a64_file(p)); }
    void write(const fs::path& out_dir) {
        json j;
        j["tool"] = "rainstorm";
        j["version"] = kVersion;
        j["subcommand"] = subcommand;
        j["parameters"] = parameters;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        std::ofstream out(out_dir / ("manifest_" + subcommand + ".json"), std::ios::binary);
        if (!out) throw std::runtime_error("cannot write manifest");
        out << j.dump(2) << '\n';
    }
};

struct CommonOpts {
    std::string out_dir = ".";
    int threads = 1;
    uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--threads", c.threads, "Parallelism cap (results are thread-count invariant)")
        ->capture_default_str();
    cmd->add_option("--seed", c.seed, "Root random seed")->capture_default_str();
    cmd->add_option("--config", "Flat key=value config file; command-line flags override");
}

// Flat key=value config: each key names a long option of the subcommand.
// Keys already present on the command line are skipped, so flags override.
std::vector<std::string> expand_config(CLI::App* cmd, const std::string& config_path,
                                       const std::vector<std::string>& given) {
    std::ifstream in(config_path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + config_path);
    std::vector<std::string> extra;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--config", config_path + ":" + std::to_string(line_no) +
                                                       ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string flag = "--" + key;
        if (cmd->get_option_no_throw(flag) == nullptr) {
            std::string valid;
            for (const CLI::Option* o : cmd->get_options())
                for (const std::string& n : o->get_lnames()) valid += " " + n;
            throw CLI::ValidationError(
                "--config", "unknown key '" + key + "'; valid keys:" + valid);
        }
        bool present = false;
        for (const std::string& a : given)
            if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
        if (!present) extra.push_back(flag + "=" + value);
    }
    return extra;
}

void add_ident(CLI::App* cmd, IdentParams& p) {
    cmd->add_option("--wet-threshold", p.wet_threshold_mm_per_step,
                    "Wet threshold (mm per timestep)")
        ->capture_default_str();
    cmd->add_option("--connectivity", p.connectivity, "Cell connectivity, 4 or 8")
        ->capture_default_str();
    cmd->add_option("--dilation-radius-km", p.dilation_radius_km,
                    "Dilation radius for almost-connected labeling")
        ->capture_default_str();
    cmd->add_option("--large-min-km2", p.large_region_min_km2,
                    "Area making a region 'large' (used when --large-min-cells is 0)")
        ->capture_default_str();
    cmd->add_option("--large-min-cells", p.large_region_min_cells,
                    "Cell count making a region 'large'; 0 derives from --large-min-km2")
        ->capture_default_str();
    cmd->add_option("--small-attach-km", p.small_attach_max_km,
                    "Max distance for attaching small regions to large segments")
        ->capture_default_str();
}

void add_cutoff(CLI::App* cmd, double& cutoff) {
    cmd->add_option("--cutoff-mm-per-hour", cutoff,
                    "Global intensity cutoff applied to loaded fields; 0 disables "
                    "(canonical value 0.033)")
        ->capture_default_str();
}

void add_track(CLI::App* cmd, TrackParams& p) {
    cmd->add_option("--min-overlap", p.min_overlap_fraction,
                    "Similarity acceptance level (intersection over minimum)")
        ->capture_default_str();
    cmd->add_option("--max-jump-km", p.max_centroid_jump_km, "Max centroid displacement per step")
        ->capture_default_str();
    cmd->add_option("--max-turn-deg", p.max_turn_deg, "Max direction change between steps")
        ->capture_default_str();
}

void ident_to_manifest(Manifest& m, const IdentParams& p) {
    m.parameters["wet_threshold"] = p.wet_threshold_mm_per_step;
    m.parameters["connectivity"] = p.connectivity;
    m.parameters["dilation_radius_km"] = p.dilation_radius_km;
    m.parameters["large_min_km2"] = p.large_region_min_km2;
    m.parameters["large_min_cells"] = p.large_region_min_cells;
    m.parameters["small_attach_km"] = p.small_attach_max_km;
}

void track_to_manifest(Manifest& m, const TrackParams& p) {
    m.parameters["min_overlap"] = p.min_overlap_fraction;
    m.parameters["max_jump_km"] = p.max_centroid_jump_km;
    m.parameters["max_turn_deg"] = p.max_turn_deg;
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

void write_segments_jsonl(const fs::path& path,
                          const std::vector<std::vector<Segment>>& segments_by_t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (size_t t = 0; t < segments_by_t.size(); ++t) {
        json line;
        line["t"] = t;
        json segs = json::array();
        for (const Segment& s : segments_by_t[t]) {
            json js;
            js["id"] = s.id;
            json cells = json::array(), values = json::array();
            for (const Region& r : s.regions) {
                for (size_t i = 0; i < r.cells.size(); ++i) {
                    cells.push_back({r.cells[i].x, r.cells[i].y});
                    values.push_back(r.values[i]);
                }
            }
            js["cells"] = std::move(cells);
            js["values"] = std::move(values);
            segs.push_back(std::move(js));
        }
        line["segments"] = std::move(segs);
        out << line.dump() << '\n';
    }
}

void write_trajectories_csv(const fs::path& path, const std::vector<StormEvent>& events,
                            const GridGeometry& geom) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "event_id,t,lat,lon\n";
    const auto lines = trajectories(events, geom);
    char buf[96];
    for (size_t i = 0; i < events.size(); ++i) {
        for (size_t k = 0; k < lines[i].size(); ++k) {
            std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%.10g\n", events[i].id,
                          events[i].birth_t + static_cast<int>(k), lines[i][k].lat,
                          lines[i][k].lon);
            out << buf;
        }
    }
}

MaskArray load_region_mask(const fs::path& path, const GridGeometry& expected) {
    const GridField f = load_field(path);
    if (!(f.geom == expected))
        throw std::runtime_error("region mask " + path.string() + " is on a different grid");
    if (f.nt() != 1) throw std::runtime_error("region mask must have nt=1: " + path.string());
    MaskArray m(f.geom.ny, f.geom.nx);
    for (int y = 0; y < f.geom.ny; ++y)
        for (int x = 0; x < f.geom.nx; ++x)
            m(y, x) = f.mask(y, x) && f.steps[0](y, x) > 0.5f;
    return m;
}

// name=path pairs from repeated options
std::vector<std::pair<std::string, std::string>> parse_named(const std::vector<std::string>& raw,
                                                             const char* what) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const std::string& s : raw) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
            throw std::runtime_error(std::string(what) + " must be name=path, got '" + s + "'");
        out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rainstorm event analysis and data-driven simulation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate a synthetic field with known storms");
    CommonOpts synth_c;
    add_common(synth, synth_c);
    int s_nx = 80, s_ny = 80, s_nt = 48, s_nstorms = 12;
    double s_dx = 12, s_dy = 12, s_dt = 3, s_lat0 = 35, s_lon0 = -100;
    synth->add_option("--nx", s_nx)->capture_default_str();
    synth->add_option("--ny", s_ny)->capture_default_str();
    synth->add_option("--nt", s_nt)->capture_default_str();
    synth->add_option("--dx-km", s_dx)->capture_default_str();
    synth->add_option("--dy-km", s_dy)->capture_default_str();
    synth->add_option("--dt-hours", s_dt)->capture_default_str();
    synth->add_option("--lat0", s_lat0)->capture_default_str();
    synth->add_option("--lon0", s_lon0)->capture_default_str();
    synth->add_option("--n-storms", s_nstorms)->capture_default_str();

    // ---- identify ----
    auto* identify = app.add_subcommand("identify", "Segment each timestep into rainstorms");
    CommonOpts id_c;
    IdentParams id_ip;
    std::string id_field;
    double id_cutoff = 0.0;
    add_common(identify, id_c);
    add_ident(identify, id_ip);
    add_cutoff(identify, id_cutoff);
    identify->add_option("--field", id_field, "Input PGRID field")->required();

    // ---- track ----
    auto* track_cmd = app.add_subcommand("track", "Identify and link segments into events");
    CommonOpts tr_c;
    IdentParams tr_ip;
    TrackParams tr_tp;
    std::string tr_field;
    double tr_cutoff = 0.0;
    add_common(track_cmd, tr_c);
    add_ident(track_cmd, tr_ip);
    add_track(track_cmd, tr_tp);
    add_cutoff(track_cmd, tr_cutoff);
    track_cmd->add_option("--field", tr_field, "Input PGRID field")->required();

    // ---- metrics ----
    auto* metrics_cmd = app.add_subcommand("metrics", "Per-event metrics from an event file");
    CommonOpts me_c;
    std::string me_field, me_events;
    add_common(metrics_cmd, me_c);
    metrics_cmd->add_option("--field", me_field, "PGRID field (for grid geometry)")->required();
    metrics_cmd->add_option("--events", me_events, "Event file from `rainstorm track`")->required();

    // ---- factorize ----
    auto* fact = app.add_subcommand("factorize", "Four-factor decomposition of total precipitation");
    CommonOpts fa_c;
    std::string fa_field, fa_events, fa_mask, fa_region_id = "all", fa_season_id = "all";
    std::string fa_assignment = "initiation";
    double fa_trim = 0.001;
    add_common(fact, fa_c);
    fact->add_option("--field", fa_field)->required();
    fact->add_option("--events", fa_events, "Event file from `rainstorm track`")->required();
    fact->add_option("--trim-fraction", fa_trim, "Negligible-storm tail fraction")
        ->capture_default_str();
    fact->add_option("--region-mask", fa_mask, "PGRID boolean region mask");
    fact->add_option("--region-assignment", fa_assignment, "initiation | weighted")
        ->capture_default_str();
    fact->add_option("--region-id", fa_region_id)->capture_default_str();
    fact->add_option("--season-id", fa_season_id)->capture_default_str();

    // ---- maps ----
    auto* maps = app.add_subcommand("maps", "Kernel and cell-wise metric maps");
    CommonOpts mp_c;
    std::string mp_field, mp_events, mp_attribution = "initiation";
    double mp_bandwidth = 200.0, mp_trim = 0.001, mp_cutoff = 0.0;
    add_common(maps, mp_c);
    add_cutoff(maps, mp_cutoff);
    maps->add_option("--field", mp_field)->required();
    maps->add_option("--events", mp_events, "Event file from `rainstorm track`")->required();
    maps->add_option("--bandwidth-km", mp_bandwidth, "Gaussian kernel bandwidth")
        ->capture_default_str();
    maps->add_option("--attribution", mp_attribution, "initiation | per-step")
        ->capture_default_str();
    maps->add_option("--trim-fraction", mp_trim)->capture_default_str();

    // ---- compare ----
    auto* compare = app.add_subcommand("compare", "Factor comparison with bootstrap CIs");
    CommonOpts cp_c;
    std::string cp_field_a, cp_events_a, cp_field_b, cp_events_b;
    std::string cp_mask, cp_assignment = "initiation";
    double cp_trim = 0.001, cp_level = 0.95;
    int cp_nboot = 2000;
    std::optional<double> cp_delta_t;
    double cp_delta_t_raw = 0.0;
    add_common(compare, cp_c);
    compare->add_option("--field-a", cp_field_a)->required();
    compare->add_option("--events-a", cp_events_a)->required();
    compare->add_option("--field-b", cp_field_b)->required();
    compare->add_option("--events-b", cp_events_b)->required();
    compare->add_option("--trim-fraction", cp_trim)->capture_default_str();
    compare->add_option("--n-boot", cp_nboot, "Bootstrap replicates")->capture_default_str();
    compare->add_option("--level", cp_level, "Confidence level")->capture_default_str();
    auto* dt_opt = compare->add_option("--delta-t-k", cp_delta_t_raw,
                                       "Temperature change for %/K normalization");
    compare->add_option("--region-mask", cp_mask,
                        "PGRID boolean region mask (both fields must share its grid)");
    compare->add_option("--region-assignment", cp_assignment, "initiation | weighted")
        ->capture_default_str();

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "Data-driven future precipitation simulation");
    CommonOpts si_c;
    SimParams si_p;
    std::string si_obs, si_baseline, si_future, si_mode = "storm";
    add_common(sim, si_c);
    add_ident(sim, si_p.ident);
    add_track(sim, si_p.track);
    sim->get_option("--seed")->required();  // reproducibility contract
    sim->add_option("--obs", si_obs, "Observed PGRID field")->required();
    sim->add_option("--baseline", si_baseline, "Model baseline PGRID field")->required();
    sim->add_option("--future", si_future, "Model future PGRID field")->required();
    sim->add_option("--mode", si_mode, "storm | gridcell")->capture_default_str();
    sim->add_option("--bandwidth-km", si_p.kernel.bandwidth_km)->capture_default_str();
    sim->add_option("--trim-fraction", si_p.trim_fraction)->capture_default_str();
    sim->add_option("--quantile-count", si_p.quantile_count)->capture_default_str();
    sim->add_option("--gap-km", si_p.substorm_gap_km, "Sub-storm separation distance")
        ->capture_default_str();
    double si_cutoff = 0.0;
    add_cutoff(sim, si_cutoff);

    // ---- evaluate ----
    auto* eval = app.add_subcommand("evaluate", "Dry-spell KL divergence vs a target field");
    CommonOpts ev_c;
    std::string ev_target;
    std::vector<std::string> ev_candidates, ev_regions;
    double ev_epsilon = 1e-6, ev_cutoff = 0.0;
    add_common(eval, ev_c);
    add_cutoff(eval, ev_cutoff);
    eval->add_option("--target", ev_target, "Target PGRID field")->required();
    eval->add_option("--candidate", ev_candidates, "name=path, repeatable")->required();
    eval->add_option("--region", ev_regions, "name=path of PGRID boolean masks, repeatable")
        ->required();
    eval->add_option("--epsilon", ev_epsilon, "Histogram smoothing epsilon")
        ->capture_default_str();

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        // pre-parse: expand a --config file of the invoked subcommand into
        // synthetic flags (skipping any flag already given explicitly)
        if (!args.empty()) {
            if (CLI::App* cmd = app.get_subcommand_no_throw(args.front())) {
                std::string config_path;
                for (size_t i = 1; i < args.size(); ++i) {
                    if (args[i] == "--config" && i + 1 < args.size())
                        config_path = args[i + 1];
                    else if (args[i].rfind("--config=", 0) == 0)
                        config_path = args[i].substr(9);
                }
                if (!config_path.empty())
                    for (std::string& flag : expand_config(cmd, config_path, args))
                        args.push_back(std::move(flag));
            }
        }
        std::reverse(args.begin(), args.end());  // CLI11's vector parse pops from the back
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // usage error
    }

    try {
        if (*synth) {
            const fs::path dir = prepare_out_dir(synth_c.out_dir);
            GridGeometry geom;
            geom.nx = s_nx;
            geom.ny = s_ny;
            geom.dx_km = s_dx;
            geom.dy_km = s_dy;
            geom.dt_hours = s_dt;
            geom.lat0 = s_lat0;
            geom.lon0 = s_lon0;
            ScenarioParams sp;
            sp.n_storms = s_nstorms;
            const SynthSpec spec = random_scenario(geom, s_nt, synth_c.seed, sp);
            SynthTruth truth;
            const GridField field = render_synth(spec, &truth);
            save_field(field, dir / "synth.pgrid");
            write_truth_json(dir / "truth.json", spec, truth);
            Manifest m;
            m.subcommand = "synth";
            m.parameters = {{"nx", s_nx},       {"ny", s_ny},           {"nt", s_nt},
                            {"dx_km", s_dx},    {"dy_km", s_dy},        {"dt_hours", s_dt},
                            {"lat0", s_lat0},   {"lon0", s_lon0},       {"n_storms", s_nstorms},
                            {"seed", synth_c.seed}};
            m.outputs = {"synth.pgrid", "truth.json"};
            m.write(dir);
        } else if (*identify) {
            const fs::path dir = prepare_out_dir(id_c.out_dir);
            require_input(id_field, "synth");
            GridField field = load_field(id_field);
            if (id_cutoff > 0) field = apply_cutoff(field, id_cutoff);
            const auto segments = identify_all(field, id_ip, id_c.threads);
            write_segments_jsonl(dir / "segments.jsonl", segments);
            Manifest m;
            m.subcommand = "identify";
            ident_to_manifest(m, id_ip);
            m.parameters["cutoff_mm_per_hour"] = id_cutoff;
            m.input(id_field);
            m.outputs = {"segments.jsonl"};
            m.write(dir);
        } else if (*track_cmd) {
            const fs::path dir = prepare_out_dir(tr_c.out_dir);
            require_input(tr_field, "synth");
            GridField field = load_field(tr_field);
            if (tr_cutoff > 0) field = apply_cutoff(field, tr_cutoff);
            const auto segments = identify_all(field, tr_ip, tr_c.threads);
            const auto events = track(segments, tr_tp, field.geom);
            write_events(dir / "events.jsonl", events);
            write_trajectories_csv(dir / "trajectories.csv", events, field.geom);
            Manifest m;
            m.subcommand = "track";
            ident_to_manifest(m, tr_ip);
            track_to_manifest(m, tr_tp);
            m.parameters["cutoff_mm_per_hour"] = tr_cutoff;
            m.input(tr_field);
            m.outputs = {"events.jsonl", "trajectories.csv"};
            m.write(dir);
        } else if (*metrics_cmd) {
            const fs::path dir = prepare_out_dir(me_c.out_dir);
            require_input(me_field, "synth");
            require_input(me_events, "track");
            const GridField field = load_field(me_field);
            const auto events = read_events(me_events);
            const auto metrics = compute_all_metrics(events, field.geom, me_c.threads);
            write_metrics_csv(dir / "metrics.csv", metrics, field.geom);
            Manifest m;
            m.subcommand = "metrics";
            m.input(me_field);
            m.input(me_events);
            m.outputs = {"metrics.csv"};
            m.write(dir);
        } else if (*fact) {
            const fs::path dir = prepare_out_dir(fa_c.out_dir);
            require_input(fa_field, "synth");
            require_input(fa_events, "track");
            const GridField field = load_field(fa_field);
            auto events = read_events(fa_events);
            events = trim_negligible(events, field.geom, fa_trim);
            RegionFilter filter;
            MaskArray region;
            if (!fa_mask.empty()) {
                require_input(fa_mask, "");
                region = load_region_mask(fa_mask, field.geom);
                filter.mask = &region;
            }
            if (fa_assignment == "weighted")
                filter.assignment = RegionAssignment::kPrecipWeighted;
            else if (fa_assignment != "initiation")
                throw std::runtime_error("--region-assignment must be initiation or weighted");
            FactorSummary f = factorize(events, field.geom, filter);
            f.region_id = fa_region_id;
            f.season_id = fa_season_id;
            write_summary_csv(dir / "factors.csv", f);
            Manifest m;
            m.subcommand = "factorize";
            m.parameters["trim_fraction"] = fa_trim;
            m.parameters["region_assignment"] = fa_assignment;
            m.parameters["region_id"] = fa_region_id;
            m.parameters["season_id"] = fa_season_id;
            m.input(fa_field);
            m.input(fa_events);
            if (!fa_mask.empty()) m.input(fa_mask);
            m.outputs = {"factors.csv"};
            m.write(dir);
        } else if (*maps) {
            const fs::path dir = prepare_out_dir(mp_c.out_dir);
            require_input(mp_field, "synth");
            require_input(mp_events, "track");
            GridField field = load_field(mp_field);
            if (mp_cutoff > 0) field = apply_cutoff(field, mp_cutoff);
            auto events = read_events(mp_events);
            events = trim_negligible(events, field.geom, mp_trim);
            const auto metrics = compute_all_metrics(events, field.geom, mp_c.threads);
            KernelSpec kernel;
            kernel.bandwidth_km = mp_bandwidth;
            MapAttribution attribution = MapAttribution::kInitiation;
            if (mp_attribution == "per-step")
                attribution = MapAttribution::kPerStep;
            else if (mp_attribution != "initiation")
                throw std::runtime_error("--attribution must be initiation or per-step");

            const MetricMap density =
                initiation_density(metrics, field.geom, field.mask, kernel, mp_c.threads);
            const MetricMap size_map =
                weighted_metric_map(metrics, EventMetric::kMeanSizeKm2, field.geom, field.mask,
                                    kernel, attribution, mp_c.threads);
            const MetricMap dur_map =
                weighted_metric_map(metrics, EventMetric::kDurationHours, field.geom, field.mask,
                                    kernel, attribution, mp_c.threads);
            const MetricMap mean_map = cellwise_map(field, CellStat::kSeasonalMeanCm);
            const MetricMap intensity_map = cellwise_map(field, CellStat::kMeanIntensity);
            for (const auto& [name, map] :
                 std::initializer_list<std::pair<const char*, const MetricMap*>>{
                     {"initiation_density", &density},
                     {"mean_size", &size_map},
                     {"mean_duration", &dur_map},
                     {"seasonal_mean", &mean_map},
                     {"intensity", &intensity_map}}) {
                save_map(*map, field.mask, dir / (std::string(name) + ".pgrid"));
                write_map_csv(*map, field.mask, dir / (std::string(name) + ".csv"));
            }
            Manifest m;
            m.subcommand = "maps";
            m.parameters["bandwidth_km"] = mp_bandwidth;
            m.parameters["attribution"] = mp_attribution;
            m.parameters["trim_fraction"] = mp_trim;
            m.parameters["cutoff_mm_per_hour"] = mp_cutoff;
            m.input(mp_field);
            m.input(mp_events);
            m.outputs = {"initiation_density.pgrid", "initiation_density.csv",
                         "mean_size.pgrid",          "mean_size.csv",
                         "mean_duration.pgrid",      "mean_duration.csv",
                         "seasonal_mean.pgrid",      "seasonal_mean.csv",
                         "intensity.pgrid",          "intensity.csv"};
            m.write(dir);
        } else if (*compare) {
            const fs::path dir = prepare_out_dir(cp_c.out_dir);
            require_input(cp_field_a, "synth");
            require_input(cp_events_a, "track");
            require_input(cp_field_b, "synth");
            require_input(cp_events_b, "track");
            if (dt_opt->count() > 0) cp_delta_t = cp_delta_t_raw;
            const GridField field_a = load_field(cp_field_a);
            const GridField field_b = load_field(cp_field_b);
            auto events_a = trim_negligible(read_events(cp_events_a), field_a.geom, cp_trim);
            auto events_b = trim_negligible(read_events(cp_events_b), field_b.geom, cp_trim);
            RegionFilter filter_a, filter_b;
            MaskArray region;
            if (!cp_mask.empty()) {
                require_input(cp_mask, "");
                region = load_region_mask(cp_mask, field_a.geom);
                if (!(field_b.geom == field_a.geom))
                    throw std::runtime_error(
                        "--region-mask needs both fields on the mask's grid");
                filter_a.mask = filter_b.mask = &region;
                if (cp_assignment == "weighted") {
                    filter_a.assignment = filter_b.assignment =
                        RegionAssignment::kPrecipWeighted;
                } else if (cp_assignment != "initiation") {
                    throw std::runtime_error(
                        "--region-assignment must be initiation or weighted");
                }
            }
            BootstrapParams bp;
            bp.n_boot = cp_nboot;
            bp.level = cp_level;
            bp.seed = cp_c.seed;
            bp.threads = cp_c.threads;
            const FactorComparison cmp =
                bootstrap_ci(events_a, events_b, field_a.geom, field_b.geom, bp, cp_delta_t,
                             filter_a, filter_b);
            write_comparison_csv(dir / "comparison.csv", cmp);
            Manifest m;
            m.subcommand = "compare";
            m.parameters["trim_fraction"] = cp_trim;
            m.parameters["n_boot"] = cp_nboot;
            m.parameters["level"] = cp_level;
            m.parameters["seed"] = cp_c.seed;
            m.parameters["region_assignment"] = cp_assignment;
            if (cp_delta_t) m.parameters["delta_t_k"] = *cp_delta_t;
            m.input(cp_field_a);
            m.input(cp_events_a);
            m.input(cp_field_b);
            m.input(cp_events_b);
            if (!cp_mask.empty()) m.input(cp_mask);
            m.outputs = {"comparison.csv"};
            m.write(dir);
        } else if (*sim) {
            const fs::path dir = prepare_out_dir(si_c.out_dir);
            require_input(si_obs, "synth");
            require_input(si_baseline, "synth");
            require_input(si_future, "synth");
            si_p.seed = si_c.seed;
            si_p.threads = si_c.threads;
            GridField obs = load_field(si_obs);
            GridField baseline = load_field(si_baseline);
            GridField future = load_field(si_future);
            if (si_cutoff > 0) {
                obs = apply_cutoff(obs, si_cutoff);
                baseline = apply_cutoff(baseline, si_cutoff);
                future = apply_cutoff(future, si_cutoff);
            }
            SimResult result;
            if (si_mode == "storm")
                result = simulate_future(obs, baseline, future, si_p);
            else if (si_mode == "gridcell")
                result = gridcellwise_simulate(obs, baseline, future, si_p);
            else
                throw std::runtime_error("--mode must be storm or gridcell");
            save_field(result.field, dir / "simulated.pgrid");
            write_sim_log(dir / "sim_log.jsonl", result.log);
            Manifest m;
            m.subcommand = "simulate";
            ident_to_manifest(m, si_p.ident);
            track_to_manifest(m, si_p.track);
            m.parameters["mode"] = si_mode;
            m.parameters["seed"] = si_p.seed;
            m.parameters["bandwidth_km"] = si_p.kernel.bandwidth_km;
            m.parameters["trim_fraction"] = si_p.trim_fraction;
            m.parameters["quantile_count"] = si_p.quantile_count;
            m.parameters["gap_km"] = si_p.substorm_gap_km;
            m.parameters["cutoff_mm_per_hour"] = si_cutoff;
            m.input(si_obs);
            m.input(si_baseline);
            m.input(si_future);
            m.outputs = {"simulated.pgrid", "sim_log.jsonl"};
            m.write(dir);
        } else if (*eval) {
            const fs::path dir = prepare_out_dir(ev_c.out_dir);
            require_input(ev_target, "simulate");
            GridField target = load_field(ev_target);
            if (ev_cutoff > 0) target = apply_cutoff(target, ev_cutoff);
            std::vector<GridField> cand_fields;
            std::vector<std::pair<std::string, const GridField*>> cands;
            for (const auto& [name, path] : parse_named(ev_candidates, "--candidate")) {
                require_input(path, "simulate");
                GridField cand = load_field(path);
                if (ev_cutoff > 0) cand = apply_cutoff(cand, ev_cutoff);
                cand_fields.push_back(std::move(cand));
                cands.emplace_back(name, nullptr);
            }
            for (size_t i = 0; i < cands.size(); ++i) cands[i].second = &cand_fields[i];
            std::vector<std::pair<std::string, MaskArray>> regions;
            for (const auto& [name, path] : parse_named(ev_regions, "--region")) {
                require_input(path, "");
                regions.emplace_back(name, load_region_mask(path, target.geom));
            }
            const EvalTable table = evaluate_simulation(target, cands, regions, ev_epsilon);
            write_eval_csv(dir / "evaluation.csv", table);
            write_eval_wide_csv(dir / "evaluation_wide.csv", table);
            Manifest m;
            m.subcommand = "evaluate";
            m.parameters["epsilon"] = ev_epsilon;
            m.parameters["cutoff_mm_per_hour"] = ev_cutoff;
            m.input(ev_target);
            for (const auto& [name, path] : parse_named(ev_candidates, "--candidate"))
                m.input(path);
            for (const auto& [name, path] : parse_named(ev_regions, "--region")) m.input(path);
            m.outputs = {"evaluation.csv", "evaluation_wide.csv"};
            m.write(dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
