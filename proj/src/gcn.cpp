#include "asrel/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <fstream>
#include <random>

#include "asrel/io.hpp"
#include "json.hpp"

namespace asrel {

// ---------------------------------------------------------------------------
// Propagation matrix

NormalizedAdjacency build_normalized_adjacency(std::size_t n, std::span<const WeightedEdge> edges) {
  Eigen::VectorXd degree = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  for (const auto& e : edges) {
    if (e.a == e.b) throw std::invalid_argument("self edge in adjacency");
    if (e.a >= n || e.b >= n) throw std::out_of_range("adjacency edge endpoint out of range");
    if (!(e.weight >= 0)) throw std::invalid_argument("negative or NaN edge weight");
    degree[e.a] += e.weight;
    degree[e.b] += e.weight;
  }
  const Eigen::VectorXd inv_sqrt = degree.cwiseSqrt().cwiseInverse();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n + 2 * edges.size());
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    triplets.emplace_back(i, i, inv_sqrt[i] * inv_sqrt[i]);
  }
  for (const auto& e : edges) {
    const double v = inv_sqrt[e.a] * e.weight * inv_sqrt[e.b];
    triplets.emplace_back(e.a, e.b, v);
    triplets.emplace_back(e.b, e.a, v);
  }
  NormalizedAdjacency adj;
  adj.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  adj.matrix.setFromTriplets(triplets.begin(), triplets.end());
  adj.matrix.makeCompressed();
  return adj;
}

NormalizedAdjacency build_normalized_adjacency(const AsGraph& g, std::span<const double> cnr,
                                               double floor) {
  if (!cnr.empty() && cnr.size() != g.edge_count()) {
    throw std::invalid_argument("cnr vector does not match edge count");
  }
  if (!(floor > 0.0 && floor <= 1.0)) throw std::invalid_argument("weight floor must be in (0, 1]");
  std::vector<WeightedEdge> edges;
  edges.reserve(g.edge_count());
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const double w = cnr.empty() ? 1.0 : std::max(cnr[e], floor);
    edges.push_back({g.edge(e).a, g.edge(e).b, w});
  }
  return build_normalized_adjacency(g.node_count(), edges);
}

// ---------------------------------------------------------------------------
// Model

std::string BlockSpec::to_string() const {
  return std::to_string(blocks) + "x" + std::to_string(layers);
}

BlockSpec BlockSpec::parse(std::string_view text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string_view::npos) throw std::invalid_argument("block spec must look like 2x1");
  const auto blocks = io::parse_int(text.substr(0, x));
  const auto layers = io::parse_int(text.substr(x + 1));
  if (!blocks || !layers || *blocks < 1 || *layers < 1 || *blocks > 16 || *layers > 16) {
    throw std::invalid_argument("invalid block spec '" + std::string(text) + "'");
  }
  return {static_cast<int>(*blocks), static_cast<int>(*layers)};
}

GcnModel::GcnModel(ModelDims dims, std::vector<RowMatrix> tensors)
    : dims_(dims), tensors_(std::move(tensors)) {
  const auto layers = static_cast<std::size_t>(dims_.layer_count());
  if (tensors_.size() != layers + 2) throw std::invalid_argument("tensor count does not match dims");
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = l == 0 ? dims_.input_dim : dims_.hidden;
    if (tensors_[l].rows() != in || tensors_[l].cols() != dims_.hidden) {
      throw std::invalid_argument("layer " + std::to_string(l) + " weight has the wrong shape");
    }
  }
  if (head_weight().rows() != 2 * dims_.hidden || head_weight().cols() != dims_.classes ||
      head_bias().rows() != 1 || head_bias().cols() != dims_.classes) {
    throw std::invalid_argument("edge head has the wrong shape");
  }
}

GcnModel GcnModel::initialize(const ModelDims& dims, std::uint64_t seed) {
  if (dims.input_dim < 1 || dims.hidden < 1 || dims.classes < 2 || dims.layer_count() < 1) {
    throw std::invalid_argument("invalid model dimensions");
  }
  std::mt19937_64 rng(seed);
  auto glorot = [&](int rows, int cols) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    RowMatrix w(rows, cols);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    return w;
  };
  std::vector<RowMatrix> tensors;
  for (int l = 0; l < dims.layer_count(); ++l) {
    tensors.push_back(glorot(l == 0 ? dims.input_dim : dims.hidden, dims.hidden));
  }
  tensors.push_back(glorot(2 * dims.hidden, dims.classes));
  tensors.push_back(RowMatrix::Zero(1, dims.classes));
  return GcnModel(dims, std::move(tensors));
}

std::size_t GcnModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.size());
  return n;
}

double GcnModel::squared_norm() const {
  double s = 0;
  for (const auto& t : tensors_) s += t.squaredNorm();
  return s;
}

bool GcnModel::all_finite() const {
  return std::all_of(tensors_.begin(), tensors_.end(), [](const RowMatrix& t) { return t.allFinite(); });
}

bool operator==(const GcnModel& a, const GcnModel& b) {
  if (!(a.dims_ == b.dims_) || a.tensors_.size() != b.tensors_.size()) return false;
  for (std::size_t i = 0; i < a.tensors_.size(); ++i) {
    if (a.tensors_[i].rows() != b.tensors_[i].rows() || a.tensors_[i].cols() != b.tensors_[i].cols() ||
        a.tensors_[i] != b.tensors_[i]) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Forward

namespace {

Eigen::VectorXd row_norms(const RowMatrix& h) { return h.rowwise().norm(); }

RowMatrix normalize_rows(const RowMatrix& h, const Eigen::VectorXd& norms) {
  RowMatrix out = h;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    if (norms[r] > 0) out.row(r) /= norms[r];
  }
  return out;
}

RowMatrix log_softmax_rows(const RowMatrix& logits) {
  RowMatrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

void check_edges(std::span<const EdgePair> edges, Eigen::Index n) {
  for (const auto& e : edges) {
    if (e.src >= n || e.dst >= n) throw std::out_of_range("edge endpoint index out of range");
  }
}

RowMatrix gather_pairs(const RowMatrix& z, std::span<const EdgePair> edges) {
  const Eigen::Index h = z.cols();
  RowMatrix u(static_cast<Eigen::Index>(edges.size()), 2 * h);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    u.row(r).head(h) = z.row(edges[k].src);
    u.row(r).tail(h) = z.row(edges[k].dst);
  }
  return u;
}

}  // namespace

RowMatrix row_l2_normalize(const RowMatrix& h) { return normalize_rows(h, row_norms(h)); }

RowMatrix forward_block(const NormalizedAdjacency& adj, const RowMatrix& h,
                        std::span<const RowMatrix> weights) {
  RowMatrix cur = h;
  for (const auto& w : weights) {
    if (cur.rows() != adj.size() || cur.cols() != w.rows()) {
      throw std::invalid_argument("forward_block: shape mismatch");
    }
    RowMatrix propagated = adj.matrix * cur;
    cur = (propagated * w).cwiseMax(0.0);
  }
  return row_l2_normalize(cur);
}

RowMatrix edge_scores(const RowMatrix& z, std::span<const EdgePair> edges, const RowMatrix& weight,
                      const RowMatrix& bias) {
  check_edges(edges, z.rows());
  if (weight.rows() != 2 * z.cols() || bias.cols() != weight.cols()) {
    throw std::invalid_argument("edge_scores: shape mismatch");
  }
  RowMatrix logits = gather_pairs(z, edges) * weight;
  logits.rowwise() += bias.row(0);
  return log_softmax_rows(logits);
}

ForwardPass forward(const GcnModel& model, const NormalizedAdjacency& adj, const RowMatrix& x,
                    std::span<const EdgePair> edges) {
  const auto& dims = model.dims();
  if (x.rows() != adj.size() || x.cols() != dims.input_dim) {
    throw std::invalid_argument("forward: feature matrix shape does not match model/graph");
  }
  check_edges(edges, x.rows());
  ForwardPass pass;
  const auto layers = static_cast<std::size_t>(dims.layer_count());
  pass.propagated.reserve(layers);
  pass.pre_activation.reserve(layers);
  pass.activation.reserve(layers);

  RowMatrix h = x;
  int layer = 0;
  for (int b = 0; b < dims.block_spec.blocks; ++b) {
    for (int l = 0; l < dims.block_spec.layers; ++l, ++layer) {
      pass.propagated.push_back(adj.matrix * h);
      pass.pre_activation.push_back(pass.propagated.back() * model.layer_weight(layer));
      pass.activation.push_back(pass.pre_activation.back().cwiseMax(0.0));
      h = pass.activation.back();
    }
    pass.row_norms.push_back(row_norms(h));
    h = normalize_rows(h, pass.row_norms.back());
  }
  pass.embeddings = std::move(h);
  pass.edge_inputs = gather_pairs(pass.embeddings, edges);
  RowMatrix logits = pass.edge_inputs * model.head_weight();
  logits.rowwise() += model.head_bias().row(0);
  pass.log_probs = log_softmax_rows(logits);
  return pass;
}

double nll_loss(const RowMatrix& log_probs, std::span<const int> labels) {
  if (static_cast<std::size_t>(log_probs.rows()) != labels.size()) {
    throw std::invalid_argument("nll_loss: one label per row required");
  }
  if (labels.empty()) return 0.0;
  double sum = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] < 0 || labels[k] >= log_probs.cols()) {
      throw std::out_of_range("label " + std::to_string(labels[k]) + " outside the class range");
    }
    sum -= log_probs(static_cast<Eigen::Index>(k), labels[k]);
  }
  return sum / static_cast<double>(labels.size());
}

double objective(const GcnModel& model, const RowMatrix& log_probs, std::span<const int> labels,
                 double weight_decay) {
  double value = nll_loss(log_probs, labels);
  if (weight_decay > 0) value += 0.5 * weight_decay * model.squared_norm();
  return value;
}

// ---------------------------------------------------------------------------
// Backward

std::vector<RowMatrix> backward(const GcnModel& model, const NormalizedAdjacency& adj,
                                const RowMatrix& x, std::span<const EdgePair> edges,
                                std::span<const int> labels, const ForwardPass& pass,
                                double weight_decay) {
  (void)x;
  const auto& dims = model.dims();
  const std::size_t m = labels.size();
  if (edges.size() != m || static_cast<std::size_t>(pass.log_probs.rows()) != m) {
    throw std::invalid_argument("backward: edges, labels and forward pass disagree");
  }
  std::vector<RowMatrix> grads(model.tensors().size());
  const std::size_t head_w = grads.size() - 2;
  const std::size_t head_b = grads.size() - 1;

  // d(mean NLL)/d logits = (softmax - onehot) / m
  RowMatrix g_logits = pass.log_probs.array().exp();
  for (std::size_t k = 0; k < m; ++k) {
    if (labels[k] < 0 || labels[k] >= dims.classes) throw std::out_of_range("label outside class range");
    g_logits(static_cast<Eigen::Index>(k), labels[k]) -= 1.0;
  }
  if (m > 0) g_logits /= static_cast<double>(m);

  grads[head_w] = pass.edge_inputs.transpose() * g_logits;
  grads[head_b] = g_logits.colwise().sum();
  const RowMatrix g_inputs = g_logits * model.head_weight().transpose();

  const Eigen::Index h = dims.hidden;
  RowMatrix g_h = RowMatrix::Zero(pass.embeddings.rows(), h);
  for (std::size_t k = 0; k < m; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    g_h.row(edges[k].src) += g_inputs.row(r).head(h);
    g_h.row(edges[k].dst) += g_inputs.row(r).tail(h);
  }

  int layer = dims.layer_count() - 1;
  for (int b = dims.block_spec.blocks - 1; b >= 0; --b) {
    // Row normalization y = a / |a|: da = (dy - y (y . dy)) / |a|.
    const auto& a = pass.activation[static_cast<std::size_t>(layer)];
    const auto& norms = pass.row_norms[static_cast<std::size_t>(b)];
    for (Eigen::Index r = 0; r < g_h.rows(); ++r) {
      if (norms[r] <= 0) continue;
      const Eigen::RowVectorXd y = a.row(r) / norms[r];
      const double dot = y.dot(g_h.row(r));
      g_h.row(r) = (g_h.row(r) - dot * y) / norms[r];
    }
    for (int l = dims.block_spec.layers - 1; l >= 0; --l, --layer) {
      const auto idx = static_cast<std::size_t>(layer);
      const RowMatrix g_pre =
          (pass.pre_activation[idx].array() > 0.0).select(g_h, RowMatrix::Zero(g_h.rows(), g_h.cols()));
      grads[idx] = pass.propagated[idx].transpose() * g_pre;
      if (layer > 0) {
        const RowMatrix g_prop = g_pre * model.layer_weight(layer).transpose();
        g_h = adj.matrix.transpose() * g_prop;
      }
    }
  }

  if (weight_decay > 0) {
    for (std::size_t t = 0; t < grads.size(); ++t) grads[t] += weight_decay * model.tensors()[t];
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Optimization

AdamOptimizer::AdamOptimizer(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void AdamOptimizer::step(std::vector<RowMatrix>& params, const std::vector<RowMatrix>& grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam: gradient count mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(RowMatrix::Zero(p.rows(), p.cols()));
      v_.push_back(RowMatrix::Zero(p.rows(), p.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseProduct(grads[i]);
    params[i].array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

TrainConfig TrainConfig::defaults(Mode mode) {
  TrainConfig c;
  c.mode = mode;
  c.epochs = 200;
  if (mode == Mode::kBinary) {
    c.learning_rate = 0.1;
    c.weight_decay = 5e-4;
    c.block_spec = {2, 2};
  } else {
    c.learning_rate = 0.05;
    c.weight_decay = 0.0;
    c.block_spec = {2, 1};
  }
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (!(weight_decay >= 0) || !std::isfinite(weight_decay)) {
    throw std::invalid_argument("weight decay must be non-negative");
  }
  if (hidden < 1) throw std::invalid_argument("hidden width must be positive");
  if (block_spec.blocks < 1 || block_spec.layers < 1) throw std::invalid_argument("invalid block spec");
}

bool TrainConfig::same_hyperparameters(const TrainConfig& other) const {
  return mode == other.mode && epochs == other.epochs && learning_rate == other.learning_rate &&
         weight_decay == other.weight_decay && block_spec == other.block_spec &&
         hidden == other.hidden;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("accuracy: size mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

Prediction predict(const GcnModel& model, const NormalizedAdjacency& adj, const RowMatrix& x,
                   std::span<const EdgePair> edges) {
  auto pass = forward(model, adj, x, edges);
  Prediction p;
  p.labels.resize(edges.size());
  for (Eigen::Index r = 0; r < pass.log_probs.rows(); ++r) {
    Eigen::Index best = 0;
    pass.log_probs.row(r).maxCoeff(&best);
    p.labels[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  p.log_probs = std::move(pass.log_probs);
  return p;
}

TrainResult train(const NormalizedAdjacency& adj, const RowMatrix& x, const EdgeBatch& train_set,
                  const EdgeBatch& val_set, const TrainConfig& config) {
  config.validate();
  if (train_set.size() == 0 || val_set.size() == 0) {
    throw std::invalid_argument("training needs non-empty train and validation splits");
  }
  if (train_set.labels.size() != train_set.size() || val_set.labels.size() != val_set.size()) {
    throw std::invalid_argument("every edge needs a label");
  }
  ModelDims dims;
  dims.input_dim = static_cast<int>(x.cols());
  dims.hidden = config.hidden;
  dims.classes = class_count(config.mode);
  dims.block_spec = config.block_spec;

  TrainResult result;
  GcnModel model = GcnModel::initialize(dims, config.seed);
  AdamOptimizer adam(config.learning_rate);
  result.best_val_accuracy = -1.0;
  result.history.reserve(static_cast<std::size_t>(config.epochs));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto pass = forward(model, adj, x, train_set.edges);
    const double loss = objective(model, pass.log_probs, train_set.labels, config.weight_decay);
    if (!std::isfinite(loss)) {
      throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) +
                          " (lr " + io::format_double(config.learning_rate) + ")");
    }
    auto grads = backward(model, adj, x, train_set.edges, train_set.labels, pass, config.weight_decay);
    adam.step(model.tensors(), grads);
    if (!model.all_finite()) {
      throw TrainingError("non-finite parameters after epoch " + std::to_string(epoch));
    }
    const auto val = predict(model, adj, x, val_set.edges);
    const double val_acc = accuracy(val.labels, val_set.labels);
    result.history.push_back({epoch, loss, val_acc});
    if (val_acc > result.best_val_accuracy) {
      result.best_val_accuracy = val_acc;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

void write_history_csv(std::ostream& out, std::span<const EpochRecord> history) {
  out << "epoch,loss,val_accuracy\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << io::format_double(r.loss) << ',' << io::format_double(r.val_accuracy)
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::json tensor_to_json(const RowMatrix& t) {
  nlohmann::json j;
  j["rows"] = t.rows();
  j["cols"] = t.cols();
  j["data"] = std::vector<double>(t.data(), t.data() + t.size());
  return j;
}

RowMatrix tensor_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw std::runtime_error("tensor data length does not match its shape");
  }
  RowMatrix t(rows, cols);
  std::copy(data.begin(), data.end(), t.data());
  return t;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto& dims = checkpoint.model.dims();
  nlohmann::json j;
  j["format"] = "asrel-gcn-checkpoint";
  j["version"] = kCheckpointVersion;
  j["layout"] = "row-major";
  j["dims"] = {{"input", dims.input_dim},
               {"hidden", dims.hidden},
               {"classes", dims.classes},
               {"blocks", dims.block_spec.to_string()}};
  j["mode"] = std::string(to_string(checkpoint.meta.mode));
  j["weight_floor"] = checkpoint.meta.weight_floor;
  j["cnr_weights"] = checkpoint.meta.cnr_weights;
  j["seed"] = checkpoint.meta.seed;
  j["best_epoch"] = checkpoint.meta.best_epoch;
  j["feature_columns"] = checkpoint.meta.feature_columns;
  auto& tensors = j["tensors"] = nlohmann::json::array();
  for (const auto& t : checkpoint.model.tensors()) tensors.push_back(tensor_to_json(t));
  auto out = io::open_output(path);
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format") != "asrel-gcn-checkpoint" || j.at("version") != kCheckpointVersion) {
      throw std::runtime_error("unsupported checkpoint format");
    }
    ModelDims dims;
    const auto& d = j.at("dims");
    dims.input_dim = d.at("input").get<int>();
    dims.hidden = d.at("hidden").get<int>();
    dims.classes = d.at("classes").get<int>();
    dims.block_spec = BlockSpec::parse(d.at("blocks").get<std::string>());
    std::vector<RowMatrix> tensors;
    for (const auto& t : j.at("tensors")) tensors.push_back(tensor_from_json(t));

    Checkpoint c{GcnModel(dims, std::move(tensors)), {}};
    const auto mode = parse_mode(j.at("mode").get<std::string>());
    if (!mode || class_count(*mode) != dims.classes) {
      throw std::runtime_error("mode does not match the class count");
    }
    c.meta.mode = *mode;
    c.meta.weight_floor = j.at("weight_floor").get<double>();
    c.meta.cnr_weights = j.at("cnr_weights").get<bool>();
    c.meta.seed = j.at("seed").get<std::uint64_t>();
    c.meta.best_epoch = j.at("best_epoch").get<int>();
    c.meta.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
    if (c.meta.feature_columns.size() != static_cast<std::size_t>(dims.input_dim)) {
      throw std::runtime_error("feature column list does not match input width");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": malformed checkpoint: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace asrel
