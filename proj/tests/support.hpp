#pragma once

// Random instance generators and brute-force reference implementations shared
// by the unit, property and acceptance tests. Oracles deliberately avoid the
// library's own data structures so that they fail independently.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <queue>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "asrel/core.hpp"
#include "asrel/gcn.hpp"
#include "asrel/path_ingest.hpp"
#include "asrel/pipeline.hpp"
#include "asrel/synth.hpp"

namespace asrel::testing {

using Rng = std::mt19937_64;
using Adjacency = std::map<Asn, std::set<Asn>>;

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Loop-free paths over at most `max_nodes` random ASNs.
inline std::vector<AsPath> random_path_set(Rng& rng, int max_nodes, int max_paths) {
  const int n = uniform_int(rng, 2, max_nodes);
  std::set<Asn> pool_set;
  while (static_cast<int>(pool_set.size()) < n) pool_set.insert(static_cast<Asn>(uniform_int(rng, 1, 100000)));
  std::vector<Asn> pool(pool_set.begin(), pool_set.end());
  const int vps = uniform_int(rng, 1, std::min(5, n));
  std::vector<AsPath> paths;
  const int count = uniform_int(rng, 1, max_paths);
  for (int p = 0; p < count; ++p) {
    std::vector<Asn> hops{pool[static_cast<std::size_t>(uniform_int(rng, 0, vps - 1))]};
    const int len = uniform_int(rng, 1, 7);
    while (static_cast<int>(hops.size()) < len) {
      const Asn next = pool[static_cast<std::size_t>(uniform_int(rng, 0, n - 1))];
      if (std::find(hops.begin(), hops.end(), next) != hops.end()) break;
      hops.push_back(next);
    }
    paths.push_back({hops, static_cast<std::size_t>(p + 1)});
  }
  return paths;
}

inline Adjacency oracle_adjacency(const std::vector<AsPath>& paths) {
  Adjacency adj;
  for (const auto& p : paths) {
    for (std::size_t i = 0; i < p.hops.size(); ++i) {
      adj[p.hops[i]];
      if (i + 1 < p.hops.size() && p.hops[i] != p.hops[i + 1]) {
        adj[p.hops[i]].insert(p.hops[i + 1]);
        adj[p.hops[i + 1]].insert(p.hops[i]);
      }
    }
  }
  return adj;
}

inline std::set<std::pair<Asn, Asn>> oracle_edges(const std::vector<AsPath>& paths) {
  std::set<std::pair<Asn, Asn>> edges;
  for (const auto& p : paths) {
    for (std::size_t i = 0; i + 1 < p.hops.size(); ++i) {
      if (p.hops[i] != p.hops[i + 1]) {
        edges.insert({std::min(p.hops[i], p.hops[i + 1]), std::max(p.hops[i], p.hops[i + 1])});
      }
    }
  }
  return edges;
}

inline std::size_t oracle_transit_degree(const std::vector<AsPath>& paths, Asn a) {
  std::set<Asn> seen;
  for (const auto& p : paths) {
    for (std::size_t i = 1; i + 1 < p.hops.size(); ++i) {
      if (p.hops[i] == a) {
        seen.insert(p.hops[i - 1]);
        seen.insert(p.hops[i + 1]);
      }
    }
  }
  return seen.size();
}

inline double oracle_cnr(const Adjacency& adj, Asn a, Asn b) {
  std::set<Asn> na = adj.at(a);
  std::set<Asn> nb = adj.at(b);
  for (auto* s : {&na, &nb}) {
    s->erase(a);
    s->erase(b);
  }
  std::set<Asn> inter;
  std::set<Asn> uni;
  std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::inserter(inter, inter.end()));
  std::set_union(na.begin(), na.end(), nb.begin(), nb.end(), std::inserter(uni, uni.end()));
  return uni.empty() ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

inline std::map<Asn, int> oracle_bfs(const Adjacency& adj, Asn src) {
  std::map<Asn, int> dist{{src, 0}};
  std::queue<Asn> q;
  q.push(src);
  while (!q.empty()) {
    const Asn u = q.front();
    q.pop();
    for (const Asn v : adj.at(u)) {
      if (!dist.count(v)) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  return dist;
}

inline int oracle_diameter(const Adjacency& adj) {
  int d = 0;
  for (const auto& [a, _] : adj) {
    for (const auto& [b, dist] : oracle_bfs(adj, a)) d = std::max(d, dist);
  }
  return d;
}

/// Mean hop distance to each member; an unreachable member counts as diameter+1.
inline double oracle_dist_to_clique(const Adjacency& adj, const std::vector<Asn>& clique, Asn a) {
  const auto dist = oracle_bfs(adj, a);
  double sum = 0;
  for (const Asn m : clique) {
    const auto it = dist.find(m);
    sum += it != dist.end() ? it->second : oracle_diameter(adj) + 1;
  }
  return sum / static_cast<double>(clique.size());
}

struct OracleVp {
  double mean = 0;
  double min = 0;
  double max = 0;
  std::size_t assign_vp = 0;
};

inline OracleVp oracle_vp_stats(const std::vector<AsPath>& paths, Asn a) {
  std::vector<double> d;
  std::set<Asn> vps;
  for (const auto& p : paths) {
    for (std::size_t i = 0; i < p.hops.size(); ++i) {
      if (p.hops[i] == a) {
        d.push_back(static_cast<double>(i));
        vps.insert(p.hops[0]);
      }
    }
  }
  OracleVp r;
  r.assign_vp = vps.size();
  if (d.empty()) return r;
  double sum = 0;
  for (const double x : d) sum += x;
  r.mean = sum / static_cast<double>(d.size());
  r.min = *std::min_element(d.begin(), d.end());
  r.max = *std::max_element(d.begin(), d.end());
  return r;
}

/// Dense reference for the normalized propagation matrix.
inline Eigen::MatrixXd oracle_adjacency_matrix(std::size_t n, const std::vector<WeightedEdge>& edges) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : edges) {
    a(e.a, e.b) += e.weight;
    a(e.b, e.a) += e.weight;
  }
  Eigen::VectorXd d = a.rowwise().sum();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) /= std::sqrt(d[i] * d[j]);
  }
  return a;
}

inline std::vector<WeightedEdge> random_weighted_graph(Rng& rng, int n, double density) {
  std::vector<WeightedEdge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (uniform_real(rng, 0, 1) < density) {
        edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), uniform_real(rng, 0.05, 1.0)});
      }
    }
  }
  return edges;
}

/// Largest |eigenvalue| estimate of a symmetric matrix by power iteration.
inline double power_iteration(const SparseMatrix& m, int iterations, Rng& rng) {
  Eigen::VectorXd v(m.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uniform_real(rng, 0.1, 1.0);
  v.normalize();
  double lambda = 0;
  for (int k = 0; k < iterations; ++k) {
    Eigen::VectorXd w = m * v;
    lambda = w.norm();
    if (lambda == 0) return 0;
    v = w / lambda;
  }
  return lambda;
}

/// Dense reference forward pass of the whole model.
inline Eigen::MatrixXd oracle_forward_logits(const GcnModel& model, const Eigen::MatrixXd& a_hat,
                                             const Eigen::MatrixXd& x, const std::vector<EdgePair>& edges) {
  const auto& dims = model.dims();
  Eigen::MatrixXd h = x;
  int layer = 0;
  for (int b = 0; b < dims.block_spec.blocks; ++b) {
    for (int l = 0; l < dims.block_spec.layers; ++l, ++layer) {
      h = (a_hat * h * Eigen::MatrixXd(model.layer_weight(layer))).cwiseMax(0.0);
    }
    for (Eigen::Index r = 0; r < h.rows(); ++r) {
      const double norm = std::sqrt(h.row(r).squaredNorm());
      if (norm > 0) h.row(r) /= norm;
    }
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(edges.size()), dims.classes);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    Eigen::RowVectorXd u(2 * h.cols());
    u << h.row(edges[k].src), h.row(edges[k].dst);
    Eigen::RowVectorXd logits = u * Eigen::MatrixXd(model.head_weight()) + Eigen::RowVectorXd(model.head_bias());
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    out.row(static_cast<Eigen::Index>(k)) = logits.array() - lse;
  }
  return out;
}

/// Small random training problem for gradient checks.
struct GradInstance {
  NormalizedAdjacency adj;
  RowMatrix x;
  GcnModel model;
  std::vector<EdgePair> edges;
  std::vector<int> labels;
  double weight_decay = 0;
};

inline GradInstance random_grad_instance(Rng& rng, BlockSpec spec) {
  GradInstance g;
  const int n = uniform_int(rng, 3, 10);
  const int d = uniform_int(rng, 2, 6);
  ModelDims dims;
  dims.input_dim = d;
  dims.hidden = uniform_int(rng, 2, 8);
  dims.classes = uniform_int(rng, 0, 1) ? 2 : 4;
  dims.block_spec = spec;
  g.adj = build_normalized_adjacency(static_cast<std::size_t>(n), random_weighted_graph(rng, n, 0.4));
  g.x = RowMatrix(n, d);
  for (Eigen::Index i = 0; i < g.x.size(); ++i) g.x.data()[i] = uniform_real(rng, -1, 1);
  g.model = GcnModel::initialize(dims, rng());
  // Nonzero bias so its gradient path is exercised too.
  for (Eigen::Index i = 0; i < g.model.tensors().back().size(); ++i) {
    g.model.tensors().back().data()[i] = uniform_real(rng, -0.5, 0.5);
  }
  const int m = uniform_int(rng, 1, 12);
  for (int k = 0; k < m; ++k) {
    const auto src = static_cast<NodeId>(uniform_int(rng, 0, n - 1));
    const auto dst = static_cast<NodeId>(uniform_int(rng, 0, n - 1));
    g.edges.push_back({src, dst});
    g.labels.push_back(uniform_int(rng, 0, dims.classes - 1));
  }
  g.weight_decay = uniform_int(rng, 0, 1) ? 0.0 : uniform_real(rng, 1e-4, 1e-2);
  return g;
}

/// True when every ReLU input and every normalized row is far enough from its
/// kink that a central difference with step `h` stays on one linear piece.
inline bool is_smooth_point(const GradInstance& g, double margin) {
  const auto pass = forward(g.model, g.adj, g.x, g.edges);
  for (const auto& q : pass.pre_activation) {
    if ((q.array().abs() < margin).any()) return false;
  }
  for (const auto& norms : pass.row_norms) {
    if ((norms.array() < margin).any()) return false;
  }
  return true;
}

/// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, floor).
/// The floor keeps entries whose true gradient is ~0 from dividing rounding
/// noise by rounding noise.
inline double max_gradient_error(GradInstance& g, double step, double floor = 1e-6) {
  const auto pass = forward(g.model, g.adj, g.x, g.edges);
  const auto grads = backward(g.model, g.adj, g.x, g.edges, g.labels, pass, g.weight_decay);
  auto loss = [&] {
    const auto p = forward(g.model, g.adj, g.x, g.edges);
    return objective(g.model, p.log_probs, g.labels, g.weight_decay);
  };
  double worst = 0;
  for (std::size_t t = 0; t < grads.size(); ++t) {
    auto& param = g.model.tensors()[t];
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double orig = param.data()[i];
      param.data()[i] = orig + step;
      const double up = loss();
      param.data()[i] = orig - step;
      const double down = loss();
      param.data()[i] = orig;
      const double numeric = (up - down) / (2 * step);
      const double analytic = grads[t].data()[i];
      const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic - numeric) / scale);
    }
  }
  return worst;
}

/// Valley-free check by pattern matching on a token string built from the
/// planted links: U uphill, D downhill, P peer, S sibling, X into an IXP,
/// Y out of an IXP. An IXP crossing "XY" is one peering.
inline bool oracle_valley_free(const GroundTruth& truth, const std::vector<Asn>& hops) {
  std::string tokens;
  for (std::size_t i = 0; i + 1 < hops.size(); ++i) {
    const auto link = truth.link(hops[i], hops[i + 1]);
    if (!link) return false;
    switch (link->label) {
      case RelLabel::kP2C:
        tokens += link->a == hops[i] ? 'D' : 'U';
        break;
      case RelLabel::kP2P:
        tokens += 'P';
        break;
      case RelLabel::kS2S:
        tokens += 'S';
        break;
      case RelLabel::kX2X:
        tokens += truth.is_ixp(hops[i + 1]) ? 'X' : 'Y';
        break;
    }
  }
  static const std::regex pattern("^(?:Y[DS]*|[US]*(?:P|XY)?[DS]*|[US]*X)$");
  return std::regex_match(tokens, pattern);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("asrel_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Synthetic topology pushed through the whole data pipeline.
struct SyntheticData {
  std::filesystem::path dir;
  PreparedGraph prepared;
  DatasetBuild build;
  LabeledEdgeSet split;
};

inline SyntheticData synthetic_data(const std::string& name, const SynthConfig& config, Mode mode,
                                    const ExportOptions& options = {}) {
  SyntheticData d;
  d.dir = scratch_dir(name);
  const auto truth = generate(config);
  const auto sim = simulate_paths(truth, config);
  export_synthetic(truth, sim, config, options, d.dir);
  const auto files = DataFiles::from_directory(d.dir);
  const auto ingested = ingest_paths(files);
  d.prepared = prepare_graph(ingested.paths, files);
  d.prepared.ingest = ingested.report;
  d.build = build_dataset(files, d.prepared.graph);
  d.split = balance_and_split(d.build.labeled, config.seed, mode);
  return d;
}

inline SynthConfig small_synth_config(std::uint64_t seed) {
  SynthConfig c;
  c.n_tier1 = 4;
  c.n_mid = 30;
  c.n_stub = 150;
  c.n_ixp = 4;
  c.n_orgs = 15;
  c.n_vps = 40;
  c.seed = seed;
  return c;
}

}  // namespace asrel::testing
