#include "asrel/eval.hpp"

#include <cmath>
#include <ostream>

#include "asrel/io.hpp"
#include "asrel/parallel.hpp"
#include "json.hpp"

namespace asrel {

ImportanceReport importance_scores(double baseline_accuracy,
                                   std::span<const std::pair<Feature, double>> ablated) {
  ImportanceReport r;
  r.baseline_accuracy = baseline_accuracy;
  double denom = 0;
  for (const auto& [f, acc] : ablated) denom += std::abs(baseline_accuracy - acc);
  r.degenerate = denom == 0.0;
  for (const auto& [f, acc] : ablated) {
    ImportanceRow row;
    row.feature = f;
    row.accuracy_without = acc;
    row.score = r.degenerate ? 0.0 : std::abs(baseline_accuracy - acc) / denom * 100.0;
    r.rows.push_back(row);
  }
  return r;
}

ImportanceReport feature_importance(const PreparedGraph& prepared, const LabeledEdgeSet& split_set,
                                    const TrainConfig& config, double weight_floor, unsigned threads) {
  const auto features = all_features();
  // Slot 0 is the full feature set; slot i+1 drops features[i].
  std::vector<double> acc(features.size() + 1);
  parallel_for(acc.size(), threads, [&](std::size_t i) {
    const FeatureSet set = i == 0 ? FeatureSet::all() : FeatureSet::without(features[i - 1]);
    acc[i] = run_experiment(prepared, split_set, config, set, weight_floor).test_accuracy;
  });
  std::vector<std::pair<Feature, double>> ablated;
  for (std::size_t i = 0; i < features.size(); ++i) ablated.emplace_back(features[i], acc[i + 1]);
  auto report = importance_scores(acc[0], ablated);
  report.seed = config.seed;
  for (auto& row : report.rows) row.seed = config.seed;
  return report;
}

std::string ImportanceReport::to_json() const {
  nlohmann::ordered_json j;
  j["baseline_accuracy"] = baseline_accuracy;
  j["seed"] = seed;
  j["degenerate"] = degenerate;
  auto& rows_json = j["features"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["feature"] = std::string(to_string(r.feature));
    row["accuracy_without"] = r.accuracy_without;
    row["score_percent"] = degenerate ? nlohmann::ordered_json() : nlohmann::ordered_json(r.score);
    row["seed"] = r.seed;
    rows_json.push_back(row);
  }
  return j.dump(2);
}

void ImportanceReport::write_csv(std::ostream& out) const {
  out << "feature,accuracy_without,score_percent,seed\n";
  for (const auto& r : rows) {
    out << to_string(r.feature) << ',' << io::format_double(r.accuracy_without) << ','
        << (degenerate ? std::string("degenerate") : io::format_double(r.score)) << ',' << r.seed << '\n';
  }
}

std::vector<TrainConfig> SweepGrid::expand(const TrainConfig& base) const {
  const auto lrs = learning_rates.empty() ? std::vector{base.learning_rate} : learning_rates;
  const auto wds = weight_decays.empty() ? std::vector{base.weight_decay} : weight_decays;
  const auto bss = block_specs.empty() ? std::vector{base.block_spec} : block_specs;
  const auto hs = hidden.empty() ? std::vector{base.hidden} : hidden;
  std::vector<TrainConfig> out;
  for (const double lr : lrs) {
    for (const double wd : wds) {
      for (const auto& bs : bss) {
        for (const int h : hs) {
          TrainConfig c = base;
          c.learning_rate = lr;
          c.weight_decay = wd;
          c.block_spec = bs;
          c.hidden = h;
          c.validate();
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

std::size_t select_best(std::span<const SweepRow> rows) {
  if (rows.empty()) throw std::invalid_argument("empty sweep");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].val_accuracy > rows[best].val_accuracy) {
      best = i;
    } else if (rows[i].val_accuracy == rows[best].val_accuracy) {
      const auto defaults = TrainConfig::defaults(rows[i].config.mode);
      auto is_default = [&](const TrainConfig& c) {
        return c.learning_rate == defaults.learning_rate && c.weight_decay == defaults.weight_decay &&
               c.block_spec == defaults.block_spec && c.hidden == defaults.hidden;
      };
      if (is_default(rows[i].config) && !is_default(rows[best].config)) best = i;
    }
  }
  return best;
}

SweepReport sweep(const PreparedGraph& prepared, const LabeledEdgeSet& split_set, const SweepGrid& grid,
                  const TrainConfig& base, double weight_floor, unsigned threads) {
  const auto configs = grid.expand(base);
  SweepReport report;
  report.rows.resize(configs.size());
  parallel_for(configs.size(), threads, [&](std::size_t i) {
    const auto r = run_experiment(prepared, split_set, configs[i], FeatureSet::all(), weight_floor);
    report.rows[i] = {configs[i], r.val_accuracy, r.test_accuracy, r.training.best_epoch};
  });
  report.best = select_best(report.rows);
  return report;
}

std::string SweepReport::to_json() const {
  nlohmann::ordered_json j;
  auto rows_json = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"learning_rate", r.config.learning_rate},
                         {"weight_decay", r.config.weight_decay},
                         {"blocks", r.config.block_spec.to_string()},
                         {"hidden", r.config.hidden},
                         {"epochs", r.config.epochs},
                         {"seed", r.config.seed},
                         {"val_accuracy", r.val_accuracy},
                         {"test_accuracy", r.test_accuracy},
                         {"best_epoch", r.best_epoch}});
  }
  // Built separately: a reference into j would dangle once j grows.
  j["rows"] = rows_json;
  j["best_index"] = best;
  if (!rows.empty()) j["best"] = rows_json[best];
  return j.dump(2);
}

void SweepReport::write_csv(std::ostream& out) const {
  out << "learning_rate,weight_decay,blocks,hidden,val_accuracy,test_accuracy,best_epoch,selected\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << io::format_double(r.config.learning_rate) << ',' << io::format_double(r.config.weight_decay)
        << ',' << r.config.block_spec.to_string() << ',' << r.config.hidden << ','
        << io::format_double(r.val_accuracy) << ',' << io::format_double(r.test_accuracy) << ','
        << r.best_epoch << ',' << (i == best ? 1 : 0) << '\n';
  }
}

}  // namespace asrel
