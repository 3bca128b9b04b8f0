#pragma once

#include <optional>
#include <string>

#include "rrmix/collection.hpp"
#include "rrmix/metrics.hpp"
#include "rrmix/report.hpp"
#include "rrmix/selection.hpp"
#include "rrmix/simgen.hpp"

namespace rrmix {

// Full procedure on one dataset: collection -> selection -> evaluation.
struct PipelineConfig {
  CollectionConfig collection;
  PenaltyConfig penalty;
  JklConfig divergence;
};

struct PipelineResult {
  Collection collection;
  SelectionResult selection;
  FittedModel chosen;
  std::optional<EvalReport> evaluation;  // present when truth is known
};

PipelineResult run_pipeline(const Dataset& train, const Dataset& test,
                            const std::optional<TrueModel>& truth, const PipelineConfig& cfg);

// Evaluation of one fitted model against a known truth on held-out data.
EvalReport evaluate_fit(const FittedModel& fit, const TrueModel& truth, const Dataset& test,
                        const JklConfig& cfg);

// Repeated-simulation driver behind `reproduce-table1`.
struct Table1Config {
  SimConfig sim;
  PipelineConfig pipeline;
  int runs = 20;
  std::uint64_t base_seed = 1;
  int workers = 1;
};

struct Table1Row {
  std::uint64_t seed = 0;
  std::vector<int> ranks_sorted;
  int misses = 0;
  int false_actives = 0;
  double ari = 0.0;
  double kl = 0.0;
  double kl_se = 0.0;
  double mse = 0.0;
  int chosen_K = 0;
  int support_size = 0;
};

struct Table1Summary {
  std::vector<Table1Row> rows;
  std::vector<double> rank_median;  // per sorted position
  double kl_mean = 0.0;
  double misses_mean = 0.0;
  double false_actives_mean = 0.0;
  double ari_mean = 0.0;
  double mse_mean = 0.0;
};

Table1Summary run_table1(const Table1Config& cfg);

Json table1_to_json(const Table1Summary& summary);

}  // namespace rrmix
