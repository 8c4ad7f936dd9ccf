#pragma once

#include "vecaug/pipeline.hpp"

#include <map>
#include <string>
#include <vector>

namespace vecaug {

/// Model variants for the ablation harness:
///   base - cohorts disabled entirely (alpha = beta = 0)
///   BI   - cohort aggregation on, separation off (alpha = 0)
///   LA   - separation on, aggregation off
///   full - everything on
enum class Variant { Base, BI, LA, Full };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Applies a variant's switches on top of a base training config.
TrainConfig variant_config(TrainConfig cfg, Variant v);

struct RunRow {
  std::string variant;
  std::uint64_t seed = 0;
  double auc = 0.0;
  double r_at_p90 = 0.0;
  double auc_camouflaged = -1.0;       // -1 when the slice is empty
  double recall_camo_at_p90 = -1.0;    // camouflaged recall at the p=0.9 operating point
  LossReport best_loss;                // training losses at the best epoch
  std::map<std::string, double> overrides;  // sweep grid point, empty for ablations
};

/// One (mean, stddev) pair per metric, aggregated over seeds.
struct VariantSummary {
  std::string variant;
  int runs = 0;
  double auc_mean = 0.0, auc_std = 0.0;
  double r_at_p90_mean = 0.0, r_at_p90_std = 0.0;
  double recall_camo_mean = -1.0, recall_camo_std = 0.0;
};

/// Runs every variant for every seed on a fixed dataset. The burn-in phase
/// depends only on the seed, so it is shared across variants within a seed.
std::vector<RunRow> ablation_run(const Dataset& ds, const TrainConfig& base,
                                 const std::vector<Variant>& variants,
                                 const std::vector<std::uint64_t>& seeds);

/// Cartesian grid sweep over the keys alpha, beta, tau, K with the full
/// variant; one run per (grid point, seed), burn-in shared within a seed.
using SweepGrid = std::vector<std::pair<std::string, std::vector<double>>>;

std::vector<RunRow> sweep_run(const Dataset& ds, const TrainConfig& base, const SweepGrid& grid,
                              const std::vector<std::uint64_t>& seeds);

std::vector<VariantSummary> summarize(const std::vector<RunRow>& rows);

/// CSV: variant, seed, [grid keys,] auc, r_at_p90, auc_camouflaged_slice,
/// recall_camo_at_p90, losses at best epoch.
void write_runs_csv(const std::string& path, const std::vector<RunRow>& rows);

}  // namespace vecaug
