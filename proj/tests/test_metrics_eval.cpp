#include <sstream>

#include "asrel/eval.hpp"
#include "asrel/metrics.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace asrel;
using asrel::testing::Rng;
using asrel::testing::uniform_int;

namespace {

ConfusionMatrix matrix(std::initializer_list<std::initializer_list<std::size_t>> rows) {
  ConfusionMatrix cm(static_cast<int>(rows.size()));
  int t = 0;
  for (const auto& row : rows) {
    int p = 0;
    for (const auto count : row) cm.add(t, p++, count);
    ++t;
  }
  return cm;
}

std::vector<std::pair<Feature, double>> ablation(std::initializer_list<double> accs) {
  std::vector<std::pair<Feature, double>> out;
  const auto features = all_features();
  std::size_t i = 0;
  for (const double a : accs) out.emplace_back(features[i++], a);
  return out;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("hand-computed binary matrix") {
    const auto cm = matrix({{5, 5}, {0, 10}});
    const auto c0 = class_metrics(cm, 0);
    CHECK(c0.precision == 1.0);
    CHECK(c0.recall == 0.5);
    const auto c1 = class_metrics(cm, 1);
    CHECK(c1.precision == 10.0 / 15.0);
    CHECK(c1.recall == 1.0);
    CHECK(overall_accuracy(cm) == 0.75);
  }

  TEST_CASE("hand-computed four-class matrix") {
    const auto cm = matrix({{8, 1, 1, 0}, {2, 6, 0, 2}, {0, 0, 10, 0}, {0, 3, 0, 7}});
    CHECK(cm.total() == 40);
    CHECK(overall_accuracy(cm) == 31.0 / 40.0);
    CHECK(class_metrics(cm, 0).precision == 0.8);
    CHECK(class_metrics(cm, 1).precision == 0.6);
    CHECK(class_metrics(cm, 1).recall == 0.6);
    CHECK(class_metrics(cm, 2).precision == 10.0 / 11.0);
    CHECK(class_metrics(cm, 3).recall == 0.7);
    CHECK(class_metrics(cm, 3).precision == 7.0 / 9.0);
  }

  TEST_CASE("diagonal matrix scores one everywhere; uniform matrix scores 1/c") {
    const auto diag = matrix({{4, 0, 0}, {0, 7, 0}, {0, 0, 1}});
    for (int k = 0; k < 3; ++k) {
      CHECK(class_metrics(diag, k).precision == 1.0);
      CHECK(class_metrics(diag, k).recall == 1.0);
    }
    CHECK(overall_accuracy(diag) == 1.0);
    const auto uniform = matrix({{3, 3, 3, 3}, {3, 3, 3, 3}, {3, 3, 3, 3}, {3, 3, 3, 3}});
    CHECK(overall_accuracy(uniform) == 0.25);
    CHECK(class_metrics(uniform, 2).precision == 0.25);
  }

  TEST_CASE("undefined ratios are flagged, not reported as numbers") {
    const auto cm = matrix({{4, 0}, {0, 0}});
    const auto m = class_metrics(cm, 1);
    CHECK(m.precision_undefined);
    CHECK(m.recall_undefined);
    CHECK_FALSE(class_metrics(cm, 0).precision_undefined);
    CHECK_THROWS_AS(class_metrics(cm, 2), std::out_of_range);
    CHECK_THROWS_AS(overall_accuracy(ConfusionMatrix(2)), std::invalid_argument);
  }

  TEST_CASE("property: confusion identities on random predictions") {
    Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
      const int c = uniform_int(rng, 0, 1) ? 2 : 4;
      const int n = uniform_int(rng, 1, 200);
      std::vector<int> truth(static_cast<std::size_t>(n));
      std::vector<int> pred(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        truth[static_cast<std::size_t>(i)] = uniform_int(rng, 0, c - 1);
        pred[static_cast<std::size_t>(i)] = uniform_int(rng, 0, 3) ? truth[static_cast<std::size_t>(i)] : uniform_int(rng, 0, c - 1);
      }
      const auto cm = ConfusionMatrix::from_predictions(truth, pred, c);
      CHECK(cm.total() == static_cast<std::size_t>(n));
      CHECK(overall_accuracy(cm) == accuracy(pred, truth));
      std::size_t recall_weighted = 0;
      for (int k = 0; k < c; ++k) {
        const auto m = class_metrics(cm, k);
        CHECK(m.precision >= 0.0);
        CHECK(m.precision <= 1.0);
        std::size_t row = 0;
        for (int p = 0; p < c; ++p) row += cm.at(k, p);
        if (row > 0) CHECK(m.recall * static_cast<double>(row) == doctest::Approx(static_cast<double>(cm.at(k, k))));
        recall_weighted += cm.at(k, k);
      }
      CHECK(recall_weighted == cm.trace());
    }
  }

  TEST_CASE("confusion CSV header and JSON shape") {
    const auto cm = matrix({{1, 2}, {3, 4}});
    std::ostringstream out;
    write_confusion_matrix(out, cm);
    CHECK(out.str() == "true\\pred,p2p,p2c\np2p,1,2\np2c,3,4\n");
    const auto json = confusion_matrix_json(cm);
    CHECK(json.find("p2c") != std::string::npos);
  }

  TEST_CASE("majority baseline") {
    const std::vector<int> labels{0, 1, 1, 3, 1};
    CHECK(majority_baseline(labels, 4) == 0.6);
  }

  TEST_CASE("degree baseline separates threshold-separable data exactly") {
    const std::vector<double> diffs{0, 1, 2, 10, 11, 12, 50, 60};
    const std::vector<int> labels{0, 0, 0, 1, 1, 1, 0, 0};
    const auto two = fit_degree_baseline(diffs, labels, 2);
    CHECK(two.thresholds.size() <= 1);
    const auto model = fit_degree_baseline(diffs, labels, 3);
    for (std::size_t i = 0; i < diffs.size(); ++i) CHECK(model.predict(diffs[i]) == labels[i]);
    CHECK(model.classes.size() == model.thresholds.size() + 1);
  }

  TEST_CASE("property: degree baseline never loses to the majority class") {
    Rng rng(43);
    for (int trial = 0; trial < 100; ++trial) {
      const int c = uniform_int(rng, 0, 1) ? 2 : 4;
      const int n = uniform_int(rng, 1, 60);
      std::vector<double> diffs;
      std::vector<int> labels;
      for (int i = 0; i < n; ++i) {
        diffs.push_back(uniform_int(rng, 0, 15));
        labels.push_back(uniform_int(rng, 0, c - 1));
      }
      const auto model = fit_degree_baseline(diffs, labels, c);
      std::vector<int> pred;
      for (const double d : diffs) pred.push_back(model.predict(d));
      CHECK(accuracy(pred, labels) >= majority_baseline(labels, c) - 1e-12);
      CHECK(model.thresholds.size() <= static_cast<std::size_t>(c - 1));
      CHECK(std::is_sorted(model.thresholds.begin(), model.thresholds.end()));
    }
  }
}

TEST_SUITE("eval") {
  TEST_CASE("importance scores sum to one hundred percent") {
    const auto a = ablation({0.9, 0.85, 0.95, 0.9, 0.7, 0.92, 0.88, 0.91, 0.6, 0.9});
    const auto r = importance_scores(0.9, a);
    CHECK_FALSE(r.degenerate);
    double sum = 0;
    for (const auto& row : r.rows) sum += row.score;
    CHECK(sum == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(r.rows[0].score == 0.0);
    CHECK(r.rows[8].score == doctest::Approx(0.3 / 0.65 * 100.0));
  }

  TEST_CASE("identical ablations are flagged degenerate") {
    const auto a = ablation({0.8, 0.8, 0.8});
    const auto r = importance_scores(0.8, a);
    CHECK(r.degenerate);
    CHECK(r.to_json().find("null") != std::string::npos);
    std::ostringstream csv;
    r.write_csv(csv);
    CHECK(csv.str().find("degenerate") != std::string::npos);
  }

  TEST_CASE("property: importance is permutation equivariant and sums to 100") {
    Rng rng(47);
    for (int trial = 0; trial < 100; ++trial) {
      const double base = asrel::testing::uniform_real(rng, 0.3, 1.0);
      std::vector<std::pair<Feature, double>> a;
      for (const Feature f : all_features()) a.emplace_back(f, asrel::testing::uniform_real(rng, 0.0, 1.0));
      const auto r = importance_scores(base, a);
      double sum = 0;
      for (const auto& row : r.rows) sum += row.score;
      CHECK(std::abs(sum - 100.0) <= 0.01);
      auto shuffled = a;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const auto s = importance_scores(base, shuffled);
      for (const auto& row : s.rows) {
        const auto it = std::find_if(r.rows.begin(), r.rows.end(), [&](const auto& x) { return x.feature == row.feature; });
        CHECK(it->score == doctest::Approx(row.score).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("sweep grid expands in order and fills empty axes from the base") {
    SweepGrid grid;
    grid.learning_rates = {0.01, 0.1};
    grid.block_specs = {{2, 1}, {2, 2}, {3, 1}};
    const auto base = TrainConfig::defaults(Mode::kMulti);
    const auto configs = grid.expand(base);
    REQUIRE(configs.size() == 6);
    CHECK(configs[0].learning_rate == 0.01);
    CHECK(configs[0].block_spec == BlockSpec{2, 1});
    CHECK(configs[1].block_spec == BlockSpec{2, 2});
    CHECK(configs[3].learning_rate == 0.1);
    for (const auto& c : configs) {
      CHECK(c.weight_decay == base.weight_decay);
      CHECK(c.hidden == base.hidden);
      CHECK(c.seed == base.seed);
    }
  }

  TEST_CASE("best sweep row prefers the defaults on ties, then the earliest row") {
    const auto def = TrainConfig::defaults(Mode::kMulti);
    auto other = def;
    other.learning_rate = 0.01;
    auto third = def;
    third.hidden = 16;
    std::vector<SweepRow> rows{{other, 0.9, 0, 1}, {def, 0.9, 0, 1}, {third, 0.8, 0, 1}};
    CHECK(select_best(rows) == 1);
    rows[1].val_accuracy = 0.5;
    CHECK(select_best(rows) == 0);
    rows[2].val_accuracy = 0.95;
    CHECK(select_best(rows) == 2);
  }

  TEST_CASE("importance and sweep on a small synthetic graph") {
    const auto data = asrel::testing::synthetic_data("eval_small", asrel::testing::small_synth_config(5), Mode::kMulti);
    auto config = TrainConfig::defaults(Mode::kMulti);
    config.epochs = 40;
    config.hidden = 16;
    const auto report = feature_importance(data.prepared, data.split, config, kDefaultWeightFloor, 2);
    REQUIRE(report.rows.size() == kFeatureCount);
    for (const auto& row : report.rows) CHECK(row.seed == config.seed);
    const auto again = feature_importance(data.prepared, data.split, config, kDefaultWeightFloor, 1);
    CHECK(again.to_json() == report.to_json());

    SweepGrid grid;
    grid.learning_rates = {0.05, 0.01};
    const auto s = sweep(data.prepared, data.split, grid, config, kDefaultWeightFloor, 2);
    REQUIRE(s.rows.size() == 2);
    CHECK(s.rows[s.best].val_accuracy >= s.rows[1 - s.best].val_accuracy);
    CHECK(sweep(data.prepared, data.split, grid, config).to_json() == s.to_json());
  }
}
