#include "rainstorm/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace rainstorm {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

int64_t DrySpellHistogram::total() const {
    int64_t n = 0;
    for (int64_t c : counts) n += c;
    return n;
}

std::vector<int> dry_spells(std::span<const float> series) {
    std::vector<int> spells;
    int run = 0;
    for (float v : series) {
        if (v == 0.0f) {
            ++run;
        } else if (run > 0) {
            spells.push_back(run);
            run = 0;
        }
    }
    if (run > 0) spells.push_back(run);
    return spells;
}

DrySpellHistogram dry_spell_histogram(const GridField& field, const MaskArray& region_mask,
                                      const std::string& region_id) {
    if (region_mask.rows() != field.geom.ny || region_mask.cols() != field.geom.nx)
        throw std::invalid_argument("dry_spell_histogram: region mask shape mismatch");
    DrySpellHistogram h;
    h.region_id = region_id;
    std::vector<float> series(static_cast<size_t>(field.nt()));
    for (int y = 0; y < field.geom.ny; ++y) {
        for (int x = 0; x < field.geom.nx; ++x) {
            if (!field.mask(y, x) || !region_mask(y, x)) continue;
            for (int t = 0; t < field.nt(); ++t)
                series[static_cast<size_t>(t)] = field.steps[static_cast<size_t>(t)](y, x);
            for (int len : dry_spells(series)) {
                if (static_cast<size_t>(len) > h.counts.size())
                    h.counts.resize(static_cast<size_t>(len), 0);
                ++h.counts[static_cast<size_t>(len) - 1];
            }
        }
    }
    return h;
}

double kl_divergence(const DrySpellHistogram& p, const DrySpellHistogram& q, double epsilon) {
    if (!(epsilon > 0)) throw std::invalid_argument("kl_divergence: epsilon must be > 0");
    const size_t L = std::max(p.counts.size(), q.counts.size());
    if (L == 0) return 0.0;
    double sum_p = 0.0, sum_q = 0.0;
    for (size_t i = 0; i < L; ++i) {
        sum_p += (i < p.counts.size() ? double(p.counts[i]) : 0.0) + epsilon;
        sum_q += (i < q.counts.size() ? double(q.counts[i]) : 0.0) + epsilon;
    }
    double kl = 0.0;
    for (size_t i = 0; i < L; ++i) {
        const double pi = ((i < p.counts.size() ? double(p.counts[i]) : 0.0) + epsilon) / sum_p;
        const double qi = ((i < q.counts.size() ? double(q.counts[i]) : 0.0) + epsilon) / sum_q;
        kl += pi * std::log(pi / qi);
    }
    return kl;
}

double EvalTable::kl(const std::string& region, const std::string& candidate) const {
    for (const EvalRow& r : rows)
        if (r.region == region && r.candidate == candidate) return r.kl_nats;
    throw std::out_of_range("no evaluation row for " + region + "/" + candidate);
}

EvalTable evaluate_simulation(
    const GridField& target,
    const std::vector<std::pair<std::string, const GridField*>>& candidates,
    const std::vector<std::pair<std::string, MaskArray>>& regions, double epsilon) {
    for (const auto& [name, f] : candidates)
        if (!(f->geom == target.geom))
            throw std::invalid_argument("evaluate_simulation: candidate '" + name +
                                        "' is on a different grid");
    EvalTable table;
    for (const auto& [name, f] : candidates) table.candidates.push_back(name);

    for (const auto& [region_id, mask] : regions) {
        const DrySpellHistogram target_hist = dry_spell_histogram(target, mask, region_id);
        if (target_hist.total() == 0) {
            std::cerr << "warning: region '" << region_id
                      << "' has no dry spells in the target; row skipped\n";
            continue;
        }
        table.regions.push_back(region_id);
        for (const auto& [name, f] : candidates) {
            const DrySpellHistogram cand_hist = dry_spell_histogram(*f, mask, region_id);
            table.rows.push_back({region_id, name, kl_divergence(target_hist, cand_hist, epsilon)});
        }
    }
    return table;
}

void write_eval_csv(const std::filesystem::path& path, const EvalTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "region,candidate,kl_nats\n";
    for (const EvalRow& r : table.rows)
        out << r.region << ',' << r.candidate << ',' << num(r.kl_nats) << '\n';
}

void write_eval_wide_csv(const std::filesystem::path& path, const EvalTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "region";
    for (const std::string& c : table.candidates) out << ',' << c;
    if (table.candidates.size() > 1) {
        const std::string& last = table.candidates.back();
        for (size_t i = 0; i + 1 < table.candidates.size(); ++i)
            out << ',' << table.candidates[i] << "_minus_" << last;
    }
    out << '\n';
    for (const std::string& region : table.regions) {
        out << region;
        for (const std::string& c : table.candidates) out << ',' << num(table.kl(region, c));
        if (table.candidates.size() > 1) {
            const double ref = table.kl(region, table.candidates.back());
            for (size_t i = 0; i + 1 < table.candidates.size(); ++i)
                out << ',' << num(table.kl(region, table.candidates[i]) - ref);
        }
        out << '\n';
    }
}

}  // namespace rainstorm
