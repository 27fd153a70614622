#include "asrel/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "asrel/core.hpp"
#include "json.hpp"

namespace asrel {

ConfusionMatrix::ConfusionMatrix(int classes) : classes_(classes) {
  if (classes < 1) throw std::invalid_argument("confusion matrix needs at least one class");
  counts_.assign(static_cast<std::size_t>(classes * classes), 0);
}

ConfusionMatrix ConfusionMatrix::from_predictions(std::span<const int> truth,
                                                  std::span<const int> predicted, int classes) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("truth/prediction size mismatch");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

void ConfusionMatrix::add(int truth, int predicted, std::size_t count) {
  if (truth < 0 || truth >= classes_ || predicted < 0 || predicted >= classes_) {
    throw std::out_of_range("class index outside the confusion matrix");
  }
  counts_[static_cast<std::size_t>(truth * classes_ + predicted)] += count;
  total_ += count;
}

std::size_t ConfusionMatrix::at(int truth, int predicted) const {
  if (truth < 0 || truth >= classes_ || predicted < 0 || predicted >= classes_) {
    throw std::out_of_range("class index outside the confusion matrix");
  }
  return counts_[static_cast<std::size_t>(truth * classes_ + predicted)];
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (int k = 0; k < classes_; ++k) t += at(k, k);
  return t;
}

ClassMetrics class_metrics(const ConfusionMatrix& cm, int k) {
  if (k < 0 || k >= cm.classes()) throw std::out_of_range("class index outside the confusion matrix");
  std::size_t row = 0;
  std::size_t col = 0;
  for (int j = 0; j < cm.classes(); ++j) {
    row += cm.at(k, j);
    col += cm.at(j, k);
  }
  const auto tp = static_cast<double>(cm.at(k, k));
  ClassMetrics m;
  m.precision_undefined = col == 0;
  m.recall_undefined = row == 0;
  m.precision = col == 0 ? 0.0 : tp / static_cast<double>(col);
  m.recall = row == 0 ? 0.0 : tp / static_cast<double>(row);
  return m;
}

double overall_accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::invalid_argument("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
}

namespace {

std::string class_name(int k, int classes) {
  return classes <= kRelLabelCount ? std::string(to_string(label_from_class(k))) : std::to_string(k);
}

}  // namespace

void write_confusion_matrix(std::ostream& out, const ConfusionMatrix& cm) {
  out << "true\\pred";
  for (int k = 0; k < cm.classes(); ++k) out << ',' << class_name(k, cm.classes());
  out << '\n';
  for (int t = 0; t < cm.classes(); ++t) {
    out << class_name(t, cm.classes());
    for (int p = 0; p < cm.classes(); ++p) out << ',' << cm.at(t, p);
    out << '\n';
  }
}

std::string confusion_matrix_json(const ConfusionMatrix& cm) {
  nlohmann::ordered_json j;
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> rows;
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (int t = 0; t < cm.classes(); ++t) {
    names.push_back(class_name(t, cm.classes()));
    auto& row = rows.emplace_back();
    for (int p = 0; p < cm.classes(); ++p) row.push_back(cm.at(t, p));
    const auto m = class_metrics(cm, t);
    per_class[names.back()] = {{"precision", m.precision},
                               {"recall", m.recall},
                               {"precision_undefined", m.precision_undefined},
                               {"recall_undefined", m.recall_undefined}};
  }
  j["classes"] = names;
  j["matrix"] = rows;
  j["total"] = cm.total();
  j["accuracy"] = cm.total() ? overall_accuracy(cm) : 0.0;
  j["per_class"] = per_class;
  return j.dump(2);
}

double majority_baseline(std::span<const int> labels, int classes) {
  if (labels.empty()) return 0.0;
  std::vector<std::size_t> counts(static_cast<std::size_t>(classes), 0);
  for (const int l : labels) {
    if (l < 0 || l >= classes) throw std::out_of_range("label outside class range");
    ++counts[static_cast<std::size_t>(l)];
  }
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
         static_cast<double>(labels.size());
}

int DegreeBaseline::predict(double diff) const {
  const auto it = std::upper_bound(thresholds.begin(), thresholds.end(), diff);
  return classes[static_cast<std::size_t>(it - thresholds.begin())];
}

DegreeBaseline fit_degree_baseline(std::span<const double> diffs, std::span<const int> labels,
                                   int classes) {
  if (diffs.size() != labels.size()) throw std::invalid_argument("diff/label size mismatch");
  if (diffs.empty()) throw std::invalid_argument("degree baseline needs training samples");
  const auto c = static_cast<std::size_t>(classes);

  std::vector<std::size_t> order(diffs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return diffs[x] < diffs[y]; });

  // Runs of equal diff form indivisible blocks; prefix[b][k] counts class k in blocks < b.
  std::vector<double> block_lo;
  std::vector<double> block_hi;
  std::vector<std::vector<std::size_t>> prefix(1, std::vector<std::size_t>(c, 0));
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double d = diffs[order[i]];
    if (block_lo.empty() || d != block_hi.back()) {
      block_lo.push_back(d);
      block_hi.push_back(d);
      prefix.push_back(prefix.back());
    }
    const int l = labels[order[i]];
    if (l < 0 || l >= classes) throw std::out_of_range("label outside class range");
    ++prefix.back()[static_cast<std::size_t>(l)];
  }
  const std::size_t blocks = block_lo.size();

  auto best_class = [&](std::size_t from, std::size_t to) {
    std::size_t best_k = 0;
    std::size_t best = 0;
    for (std::size_t k = 0; k < c; ++k) {
      const std::size_t n = prefix[to][k] - prefix[from][k];
      if (n > best) {
        best = n;
        best_k = k;
      }
    }
    return std::pair{best_k, best};
  };

  const std::size_t max_segments = std::min(c, blocks);
  constexpr long kUnset = -1;
  // dp[s][j]: best correct count covering blocks [0, j) with exactly s segments.
  std::vector<std::vector<long>> dp(max_segments + 1, std::vector<long>(blocks + 1, kUnset));
  std::vector<std::vector<std::size_t>> cut(max_segments + 1, std::vector<std::size_t>(blocks + 1, 0));
  dp[0][0] = 0;
  for (std::size_t s = 1; s <= max_segments; ++s) {
    for (std::size_t j = s; j <= blocks; ++j) {
      for (std::size_t i = s - 1; i < j; ++i) {
        if (dp[s - 1][i] == kUnset) continue;
        const long v = dp[s - 1][i] + static_cast<long>(best_class(i, j).second);
        if (v > dp[s][j]) {
          dp[s][j] = v;
          cut[s][j] = i;
        }
      }
    }
  }
  std::size_t segments = 1;
  for (std::size_t s = 2; s <= max_segments; ++s) {
    if (dp[s][blocks] > dp[segments][blocks]) segments = s;
  }

  std::vector<std::size_t> bounds;  // block index where each segment starts
  for (std::size_t s = segments, j = blocks; s > 0; --s) {
    bounds.push_back(cut[s][j]);
    j = cut[s][j];
  }
  std::reverse(bounds.begin(), bounds.end());
  bounds.push_back(blocks);

  DegreeBaseline model;
  for (std::size_t s = 0; s < segments; ++s) {
    model.classes.push_back(static_cast<int>(best_class(bounds[s], bounds[s + 1]).first));
    if (s > 0) model.thresholds.push_back(0.5 * (block_hi[bounds[s] - 1] + block_lo[bounds[s]]));
  }
  return model;
}

}  // namespace asrel
