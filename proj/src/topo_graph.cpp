#include "asrel/topo_graph.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <tuple>

#include "asrel/io.hpp"
#include "asrel/parallel.hpp"

namespace asrel {

namespace {

constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();

template <class T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::vector<std::uint32_t> bfs(const AsGraph& g, NodeId source) {
  std::vector<std::uint32_t> dist(g.node_count(), kUnreached);
  std::vector<NodeId> frontier{source};
  dist[source] = 0;
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    const NodeId u = frontier[head];
    for (const NodeId v : g.neighbors(u)) {
      if (dist[v] != kUnreached) continue;
      dist[v] = dist[u] + 1;
      frontier.push_back(v);
    }
  }
  return dist;
}

}  // namespace

std::optional<NodeId> AsGraph::find(Asn asn) const {
  const auto it = index_.find(asn);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId AsGraph::index_of(Asn asn) const {
  const auto id = find(asn);
  if (!id) throw std::out_of_range("unknown AS " + std::to_string(asn));
  return *id;
}

std::uint64_t AsGraph::edge_key(NodeId u, NodeId v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

std::optional<EdgeId> AsGraph::find_edge(NodeId u, NodeId v) const {
  const auto it = edge_index_.find(edge_key(u, v));
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

AsGraph build_graph(std::span<const AsPath> paths) {
  AsGraph g;
  for (const auto& p : paths) g.asns_.insert(g.asns_.end(), p.hops.begin(), p.hops.end());
  sort_unique(g.asns_);
  const std::size_t n = g.asns_.size();
  g.index_.reserve(n * 2);
  for (NodeId i = 0; i < n; ++i) g.index_.emplace(g.asns_[i], i);

  g.transit_.resize(n);
  g.node_observers_.resize(n);
  g.vp_distances_.resize(n);

  // Edges get provisional ids in order of first appearance.
  std::unordered_map<std::uint64_t, EdgeId> provisional;
  std::vector<AsGraph::Edge> edges;
  std::vector<std::vector<Asn>> observers;
  std::vector<NodeId> ids;
  for (const auto& p : paths) {
    if (p.hops.empty()) continue;
    const Asn vp = p.hops.front();
    ids.clear();
    for (const Asn a : p.hops) ids.push_back(g.index_.at(a));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      g.vp_distances_[ids[i]].push_back(static_cast<std::uint32_t>(i));
      g.node_observers_[ids[i]].push_back(vp);
      if (i > 0 && ids[i] != ids[i - 1]) {
        const auto key = AsGraph::edge_key(ids[i - 1], ids[i]);
        auto [it, inserted] = provisional.try_emplace(key, static_cast<EdgeId>(edges.size()));
        if (inserted) {
          edges.push_back({std::min(ids[i - 1], ids[i]), std::max(ids[i - 1], ids[i])});
          observers.emplace_back();
        }
        observers[it->second].push_back(vp);
      }
      if (i > 0 && i + 1 < ids.size()) {
        if (ids[i - 1] != ids[i]) g.transit_[ids[i]].push_back(ids[i - 1]);
        if (ids[i + 1] != ids[i]) g.transit_[ids[i]].push_back(ids[i + 1]);
      }
    }
  }

  std::vector<EdgeId> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](EdgeId x, EdgeId y) {
    return std::tie(edges[x].a, edges[x].b) < std::tie(edges[y].a, edges[y].b);
  });
  g.edges_.reserve(edges.size());
  g.edge_observers_.reserve(edges.size());
  g.edge_index_.reserve(edges.size() * 2);
  g.adjacency_.resize(n);
  for (const EdgeId old : order) {
    const auto e = edges[old];
    g.edge_index_.emplace(AsGraph::edge_key(e.a, e.b), static_cast<EdgeId>(g.edges_.size()));
    g.edges_.push_back(e);
    sort_unique(observers[old]);
    g.edge_observers_.push_back(std::move(observers[old]));
    g.adjacency_[e.a].push_back(e.b);
    g.adjacency_[e.b].push_back(e.a);
  }
  for (NodeId i = 0; i < n; ++i) {
    std::sort(g.adjacency_[i].begin(), g.adjacency_[i].end());
    sort_unique(g.transit_[i]);
    sort_unique(g.node_observers_[i]);
    std::sort(g.vp_distances_[i].begin(), g.vp_distances_[i].end());
  }
  return g;
}

std::size_t transit_degree(const AsGraph& g, Asn asn) {
  return g.transit_neighbors(g.index_of(asn)).size();
}

bool Clique::contains(Asn asn) const {
  return std::binary_search(members.begin(), members.end(), asn);
}

Clique infer_clique(const AsGraph& g, std::size_t k_candidates) {
  Clique clique;
  if (g.empty()) return clique;
  std::vector<NodeId> ranked(g.node_count());
  std::iota(ranked.begin(), ranked.end(), 0);
  std::stable_sort(ranked.begin(), ranked.end(), [&](NodeId x, NodeId y) {
    const auto tx = g.transit_neighbors(x).size();
    const auto ty = g.transit_neighbors(y).size();
    if (tx != ty) return tx > ty;
    return g.degree(x) > g.degree(y);
  });
  const std::size_t scan = std::min(std::max<std::size_t>(k_candidates, 1), ranked.size());
  std::vector<NodeId> members{ranked.front()};
  for (std::size_t r = 1; r < scan; ++r) {
    const NodeId candidate = ranked[r];
    // Zero-transit ASes are edge networks; letting them in would make any
    // leaf of the seed a clique member.
    if (g.transit_neighbors(candidate).empty()) break;
    const bool joins = std::all_of(members.begin(), members.end(),
                                   [&](NodeId m) { return g.has_edge(m, candidate); });
    if (joins) members.push_back(candidate);
  }
  for (const NodeId m : members) clique.members.push_back(g.asn(m));
  std::sort(clique.members.begin(), clique.members.end());
  return clique;
}

Clique load_clique(const std::filesystem::path& path, const AsGraph& g) {
  Clique clique;
  clique.members = io::read_asn_list(path);
  sort_unique(clique.members);
  if (clique.members.empty()) throw std::runtime_error("clique file is empty: " + path.string());
  for (const Asn a : clique.members) {
    if (!g.contains(a)) {
      throw std::runtime_error("clique member AS " + std::to_string(a) + " from " + path.string() +
                               " is not in the graph");
    }
  }
  return clique;
}

bool is_pairwise_adjacent(const AsGraph& g, const Clique& clique) {
  for (std::size_t i = 0; i < clique.members.size(); ++i) {
    for (std::size_t j = i + 1; j < clique.members.size(); ++j) {
      if (!g.has_edge(g.index_of(clique.members[i]), g.index_of(clique.members[j]))) return false;
    }
  }
  return true;
}

std::uint32_t graph_diameter(const AsGraph& g, unsigned threads) {
  std::vector<std::uint32_t> ecc(g.node_count(), 0);
  parallel_for(g.node_count(), threads, [&](std::size_t s) {
    std::uint32_t best = 0;
    for (const auto d : bfs(g, static_cast<NodeId>(s))) {
      if (d != kUnreached) best = std::max(best, d);
    }
    ecc[s] = best;
  });
  return ecc.empty() ? 0 : *std::max_element(ecc.begin(), ecc.end());
}

CliqueDistances clique_distances(const AsGraph& g, const Clique& clique, unsigned threads) {
  CliqueDistances out;
  const std::size_t n = g.node_count();
  out.mean.assign(n, 0.0);
  if (clique.members.empty() || n == 0) return out;

  std::vector<std::vector<std::uint32_t>> per_member(clique.members.size());
  parallel_for(per_member.size(), threads, [&](std::size_t m) {
    per_member[m] = bfs(g, g.index_of(clique.members[m]));
  });

  for (const auto& dist : per_member) {
    out.unreachable_pairs +=
        static_cast<std::size_t>(std::count(dist.begin(), dist.end(), kUnreached));
  }
  if (out.unreachable_pairs > 0) out.substitute_distance = graph_diameter(g, threads) + 1;

  const double count = static_cast<double>(per_member.size());
  for (std::size_t v = 0; v < n; ++v) {
    double sum = 0;
    for (const auto& dist : per_member) {
      sum += dist[v] == kUnreached ? out.substitute_distance : dist[v];
    }
    out.mean[v] = sum / count;
  }
  return out;
}

double dist_to_clique(const AsGraph& g, const Clique& clique, Asn asn) {
  if (clique.members.empty()) throw std::invalid_argument("empty clique");
  const auto dist = bfs(g, g.index_of(asn));
  double sum = 0;
  std::optional<std::uint32_t> substitute;
  for (const Asn m : clique.members) {
    const auto d = dist[g.index_of(m)];
    if (d == kUnreached) {
      if (!substitute) substitute = graph_diameter(g) + 1;
      sum += *substitute;
    } else {
      sum += d;
    }
  }
  return sum / static_cast<double>(clique.members.size());
}

double common_neighbor_ratio_at(const AsGraph& g, NodeId a, NodeId b) {
  if (!g.has_edge(a, b)) {
    throw std::invalid_argument("common neighbor ratio requested for non-edge (" +
                                std::to_string(g.asn(a)) + ", " + std::to_string(g.asn(b)) + ")");
  }
  const auto na = g.neighbors(a);
  const auto nb = g.neighbors(b);
  std::size_t common = 0;
  std::size_t uni = 0;
  auto i = na.begin();
  auto j = nb.begin();
  while (i != na.end() || j != nb.end()) {
    if (i != na.end() && (*i == a || *i == b)) {
      ++i;
      continue;
    }
    if (j != nb.end() && (*j == a || *j == b)) {
      ++j;
      continue;
    }
    if (j == nb.end() || (i != na.end() && *i < *j)) {
      ++i;
    } else if (i == na.end() || *j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
    ++uni;
  }
  return uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
}

double common_neighbor_ratio(const AsGraph& g, Asn a, Asn b) {
  return common_neighbor_ratio_at(g, g.index_of(a), g.index_of(b));
}

std::vector<double> edge_cnr(const AsGraph& g) {
  std::vector<double> out(g.edge_count());
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    out[e] = common_neighbor_ratio_at(g, g.edge(e).a, g.edge(e).b);
  }
  return out;
}

VpStats vp_stats_at(const AsGraph& g, NodeId id) {
  VpStats s;
  const auto dist = g.vp_distances(id);
  s.assign_vp = g.node_observers(id).size();
  if (dist.empty()) return s;
  s.observed = true;
  double sum = 0;
  for (const auto d : dist) sum += d;
  s.mean = sum / static_cast<double>(dist.size());
  s.min = *std::min_element(dist.begin(), dist.end());
  s.max = *std::max_element(dist.begin(), dist.end());
  return s;
}

VpStats vp_stats(const AsGraph& g, Asn asn) { return vp_stats_at(g, g.index_of(asn)); }

std::string_view to_string(Hierarchy h) {
  switch (h) {
    case Hierarchy::kNucleus:
      return "nucleus";
    case Hierarchy::kMiddle:
      return "middle";
    case Hierarchy::kShell:
      return "shell";
  }
  return "?";
}

Hierarchy hierarchy_class(const AsGraph& g, const Clique& clique, Asn asn) {
  const NodeId id = g.index_of(asn);
  if (clique.contains(asn)) return Hierarchy::kNucleus;
  return g.transit_neighbors(id).empty() ? Hierarchy::kShell : Hierarchy::kMiddle;
}

}  // namespace asrel
