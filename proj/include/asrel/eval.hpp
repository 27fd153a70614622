#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "asrel/features.hpp"
#include "asrel/gcn.hpp"
#include "asrel/pipeline.hpp"

namespace asrel {

// ---------------------------------------------------------------------------
// Leave-one-feature-out importance

struct ImportanceRow {
  Feature feature;
  double accuracy_without = 0;
  double score = 0;  // percent; meaningless when the report is degenerate
  std::uint64_t seed = 0;
};

struct ImportanceReport {
  double baseline_accuracy = 0;
  std::uint64_t seed = 0;
  std::vector<ImportanceRow> rows;
  /// Every ablation matched the baseline, so the score denominator is zero.
  bool degenerate = false;

  std::string to_json() const;
  void write_csv(std::ostream& out) const;
};

/// S_i = |base - acc_i| / sum_j |base - acc_j| * 100.
ImportanceReport importance_scores(double baseline_accuracy,
                                   std::span<const std::pair<Feature, double>> ablated);

/// Retrains once with all features and once per ablated feature, all with
/// `config.seed`. Accuracies are test-split accuracies.
ImportanceReport feature_importance(const PreparedGraph& prepared, const LabeledEdgeSet& split_set,
                                    const TrainConfig& config, double weight_floor = kDefaultWeightFloor,
                                    unsigned threads = 1);

// ---------------------------------------------------------------------------
// Hyperparameter sweep

struct SweepGrid {
  std::vector<double> learning_rates;
  std::vector<double> weight_decays;
  std::vector<BlockSpec> block_specs;
  std::vector<int> hidden;

  /// Cartesian product in (lr, wd, blocks, hidden) order; empty axes take the
  /// value from `base`.
  std::vector<TrainConfig> expand(const TrainConfig& base) const;
};

struct SweepRow {
  TrainConfig config;
  double val_accuracy = 0;
  double test_accuracy = 0;
  int best_epoch = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // grid order
  std::size_t best = 0;

  std::string to_json() const;
  void write_csv(std::ostream& out) const;
};

/// Highest validation accuracy; ties prefer the mode's default configuration,
/// then the earliest row.
std::size_t select_best(std::span<const SweepRow> rows);

SweepReport sweep(const PreparedGraph& prepared, const LabeledEdgeSet& split_set, const SweepGrid& grid,
                  const TrainConfig& base, double weight_floor = kDefaultWeightFloor,
                  unsigned threads = 1);

}  // namespace asrel
