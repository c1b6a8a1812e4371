// Dry-spell-length distributions and KL-divergence evaluation of simulated
// fields against a known target.
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rainstorm/grid.hpp"

namespace rainstorm {

// Pooled dry-spell-length counts for one region; counts[k] holds spells of
// length k+1 timesteps.
struct DrySpellHistogram {
    std::string region_id;
    std::vector<int64_t> counts;

    int64_t total() const;
};

// Maximal runs of zero-precipitation timesteps, boundary runs included.
std::vector<int> dry_spells(std::span<const float> series);

DrySpellHistogram dry_spell_histogram(const GridField& field, const MaskArray& region_mask,
                                      const std::string& region_id);

// KL(p||q) in nats after additive-epsilon smoothing of both histograms over
// their common length range.
double kl_divergence(const DrySpellHistogram& p, const DrySpellHistogram& q,
                     double epsilon = 1e-6);

struct EvalRow {
    std::string region;
    std::string candidate;
    double kl_nats = 0.0;
};

struct EvalTable {
    std::vector<std::string> regions;     // rows, in input order
    std::vector<std::string> candidates;  // columns, in input order
    std::vector<EvalRow> rows;

    double kl(const std::string& region, const std::string& candidate) const;
};

// KL(target || candidate) per region and candidate. Regions with no
// in-mask cells or no target dry spells are skipped with a warning.
EvalTable evaluate_simulation(const GridField& target,
                              const std::vector<std::pair<std::string, const GridField*>>& candidates,
                              const std::vector<std::pair<std::string, MaskArray>>& regions,
                              double epsilon = 1e-6);

// Long form: region,candidate,kl_nats.
void write_eval_csv(const std::filesystem::path& path, const EvalTable& table);
// Wide form: one row per region, one column per candidate, then difference
// columns of every candidate against the last one.
void write_eval_wide_csv(const std::filesystem::path& path, const EvalTable& table);

}  // namespace rainstorm
