#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace asrel {

/// Counts indexed [true class][predicted class].
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes);
  static ConfusionMatrix from_predictions(std::span<const int> truth, std::span<const int> predicted,
                                          int classes);

  void add(int truth, int predicted, std::size_t count = 1);
  std::size_t at(int truth, int predicted) const;
  int classes() const { return classes_; }
  std::size_t total() const { return total_; }
  std::size_t trace() const;

 private:
  int classes_;
  std::size_t total_ = 0;
  std::vector<std::size_t> counts_;
};

/// One-vs-rest metrics for a class. A 0/0 ratio is reported as 0 and flagged.
struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  bool precision_undefined = false;
  bool recall_undefined = false;
};

/// Throws std::out_of_range for a class outside the matrix.
ClassMetrics class_metrics(const ConfusionMatrix& cm, int k);

/// trace / total. Throws std::invalid_argument on an empty matrix.
double overall_accuracy(const ConfusionMatrix& cm);

/// Row-major with a `true\pred,p2p,p2c[,s2s,x2x]` header.
void write_confusion_matrix(std::ostream& out, const ConfusionMatrix& cm);
std::string confusion_matrix_json(const ConfusionMatrix& cm);

/// Share of the most frequent class in `labels`.
double majority_baseline(std::span<const int> labels, int classes);

/// Classifies a link from |degree(a) - degree(b)| alone: the sorted line is cut
/// into at most `classes` intervals, each mapped to one class. Fit exactly
/// (maximum training accuracy) by dynamic programming.
struct DegreeBaseline {
  std::vector<double> thresholds;  // ascending interval upper bounds (exclusive)
  std::vector<int> classes;        // thresholds.size() + 1 entries

  int predict(double diff) const;
};

DegreeBaseline fit_degree_baseline(std::span<const double> diffs, std::span<const int> labels,
                                   int classes);

}  // namespace asrel
