#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "asrel/core.hpp"
#include "asrel/matrix.hpp"
#include "asrel/topo_graph.hpp"

namespace asrel {

inline constexpr double kDefaultWeightFloor = 0.05;
inline constexpr int kDefaultHidden = 32;

// ---------------------------------------------------------------------------
// Propagation matrix

struct WeightedEdge {
  NodeId a;
  NodeId b;
  double weight;
};

/// D^-1/2 (A_w + I) D^-1/2 where D is the row sum of A_w + I.
struct NormalizedAdjacency {
  SparseMatrix matrix;

  Eigen::Index size() const { return matrix.rows(); }
};

NormalizedAdjacency build_normalized_adjacency(std::size_t n, std::span<const WeightedEdge> edges);

/// Edge weights are max(cnr[e], floor). An empty `cnr` gives every edge
/// weight 1 (the unweighted operator).
NormalizedAdjacency build_normalized_adjacency(const AsGraph& g, std::span<const double> cnr,
                                               double floor = kDefaultWeightFloor);

// ---------------------------------------------------------------------------
// Model

/// `blocks` GCN blocks of `layers` layers each; written "AxB".
struct BlockSpec {
  int blocks = 2;
  int layers = 1;

  std::string to_string() const;
  static BlockSpec parse(std::string_view text);
  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct ModelDims {
  int input_dim = 0;
  int hidden = kDefaultHidden;
  int classes = 2;
  BlockSpec block_spec;

  int layer_count() const { return block_spec.blocks * block_spec.layers; }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Trainable parameters. Tensors are kept in one flat list: the GCN layer
/// weights in forward order (block-major), then the edge-head weight (2h x c),
/// then the edge-head bias (1 x c).
class GcnModel {
 public:
  GcnModel() = default;
  GcnModel(ModelDims dims, std::vector<RowMatrix> tensors);

  /// Glorot-uniform weights from `seed`, zero bias.
  static GcnModel initialize(const ModelDims& dims, std::uint64_t seed);

  const ModelDims& dims() const { return dims_; }
  std::vector<RowMatrix>& tensors() { return tensors_; }
  const std::vector<RowMatrix>& tensors() const { return tensors_; }

  const RowMatrix& layer_weight(int layer) const { return tensors_[static_cast<std::size_t>(layer)]; }
  const RowMatrix& head_weight() const { return tensors_[tensors_.size() - 2]; }
  const RowMatrix& head_bias() const { return tensors_.back(); }

  std::size_t parameter_count() const;
  double squared_norm() const;
  bool all_finite() const;

  friend bool operator==(const GcnModel& a, const GcnModel& b);

 private:
  ModelDims dims_;
  std::vector<RowMatrix> tensors_;
};

/// Ordered node pair (source, target); the edge head is order-sensitive.
struct EdgePair {
  NodeId src;
  NodeId dst;
};

/// Row-wise L2 normalization; all-zero rows pass through unchanged.
RowMatrix row_l2_normalize(const RowMatrix& h);

/// One block: per layer H <- ReLU(Â H W), then row-normalize the result.
RowMatrix forward_block(const NormalizedAdjacency& adj, const RowMatrix& h,
                        std::span<const RowMatrix> weights);

/// Log-softmax of [Z_src | Z_dst] W + b for every pair (one row per pair).
RowMatrix edge_scores(const RowMatrix& z, std::span<const EdgePair> edges, const RowMatrix& weight,
                      const RowMatrix& bias);

/// Intermediates kept for the backward pass.
struct ForwardPass {
  std::vector<RowMatrix> propagated;      // Â H_in, per layer
  std::vector<RowMatrix> pre_activation;  // (Â H_in) W, per layer
  std::vector<RowMatrix> activation;      // ReLU output, per layer
  std::vector<Eigen::VectorXd> row_norms;  // per block, of its last activation
  RowMatrix embeddings;                    // Z
  RowMatrix edge_inputs;                   // [Z_src | Z_dst]
  RowMatrix log_probs;                     // per edge, length c
};

ForwardPass forward(const GcnModel& model, const NormalizedAdjacency& adj, const RowMatrix& x,
                    std::span<const EdgePair> edges);

/// Mean negative log-likelihood. Throws std::out_of_range for a label >= c.
double nll_loss(const RowMatrix& log_probs, std::span<const int> labels);

/// nll_loss + weight_decay * 0.5 * ||theta||^2.
double objective(const GcnModel& model, const RowMatrix& log_probs, std::span<const int> labels,
                 double weight_decay);

/// Exact gradient of objective() with respect to every tensor of `model`,
/// given the forward pass computed on the same `edges`.
std::vector<RowMatrix> backward(const GcnModel& model, const NormalizedAdjacency& adj,
                                const RowMatrix& x, std::span<const EdgePair> edges,
                                std::span<const int> labels, const ForwardPass& pass,
                                double weight_decay);

// ---------------------------------------------------------------------------
// Optimization

class AdamOptimizer {
 public:
  explicit AdamOptimizer(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8);

  void step(std::vector<RowMatrix>& params, const std::vector<RowMatrix>& grads);
  long steps() const { return t_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
  std::vector<RowMatrix> m_;
  std::vector<RowMatrix> v_;
};

struct TrainConfig {
  Mode mode = Mode::kMulti;
  int epochs = 200;
  double learning_rate = 0.05;
  double weight_decay = 0.0;
  BlockSpec block_spec{2, 1};
  int hidden = kDefaultHidden;
  std::uint64_t seed = 7;

  /// binary: lr 0.1, wd 5e-4, 2x2; multi: lr 0.05, wd 0, 2x1; 200 epochs.
  static TrainConfig defaults(Mode mode);
  void validate() const;
  bool same_hyperparameters(const TrainConfig& other) const;
};

struct EdgeBatch {
  std::vector<EdgePair> edges;
  std::vector<int> labels;

  std::size_t size() const { return edges.size(); }
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0;  // training objective before the epoch's update
  double val_accuracy = 0;  // after the update
};

struct TrainResult {
  GcnModel model;  // snapshot with the best validation accuracy
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_accuracy = 0;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full-batch training. The loss covers `train_set` only; Â and X span the
/// whole graph. Ties in validation accuracy keep the earliest epoch.
TrainResult train(const NormalizedAdjacency& adj, const RowMatrix& x, const EdgeBatch& train_set,
                  const EdgeBatch& val_set, const TrainConfig& config);

struct Prediction {
  std::vector<int> labels;  // argmax class per edge
  RowMatrix log_probs;
};

Prediction predict(const GcnModel& model, const NormalizedAdjacency& adj, const RowMatrix& x,
                   std::span<const EdgePair> edges);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

void write_history_csv(std::ostream& out, std::span<const EpochRecord> history);

// ---------------------------------------------------------------------------
// Checkpoints

struct CheckpointMeta {
  Mode mode = Mode::kMulti;
  double weight_floor = kDefaultWeightFloor;
  bool cnr_weights = true;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  std::vector<std::string> feature_columns;
};

struct Checkpoint {
  GcnModel model;
  CheckpointMeta meta;
};

/// JSON document: dims, block spec, weight floor, feature columns and every
/// tensor as row-major decimal (shortest round-trip form).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace asrel
