#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "asrel/core.hpp"
#include "asrel/path_ingest.hpp"

namespace asrel {

/// Undirected AS-level topology built from sanitized paths.
///
/// Nodes are indexed 0..n-1 in ascending ASN order, so NodeId order equals ASN
/// order. Each edge is stored once with `a < b`. Alongside the adjacency the
/// graph keeps what the paths revealed: which vantage points saw each node and
/// edge, every hop distance of a node from the VP of a containing path, and the
/// neighbors a node exhibited while in the middle of a path triplet.
class AsGraph {
 public:
  struct Edge {
    NodeId a;
    NodeId b;
  };

  std::size_t node_count() const { return asns_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool empty() const { return asns_.empty(); }

  std::span<const Asn> asns() const { return asns_; }
  Asn asn(NodeId id) const { return asns_[id]; }
  std::optional<NodeId> find(Asn asn) const;
  /// Throws std::out_of_range for an unknown ASN.
  NodeId index_of(Asn asn) const;
  bool contains(Asn asn) const { return find(asn).has_value(); }

  std::span<const NodeId> neighbors(NodeId id) const { return adjacency_[id]; }
  std::size_t degree(NodeId id) const { return adjacency_[id].size(); }
  std::span<const NodeId> transit_neighbors(NodeId id) const { return transit_[id]; }

  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(EdgeId id) const { return edges_[id]; }
  std::optional<EdgeId> find_edge(NodeId u, NodeId v) const;
  bool has_edge(NodeId u, NodeId v) const { return find_edge(u, v).has_value(); }

  /// Distinct VPs whose paths traverse the edge / contain the node (sorted).
  std::span<const Asn> edge_observers(EdgeId id) const { return edge_observers_[id]; }
  std::span<const Asn> node_observers(NodeId id) const { return node_observers_[id]; }
  /// Hop distance of the node from the VP, one entry per containing path.
  std::span<const std::uint32_t> vp_distances(NodeId id) const { return vp_distances_[id]; }

 private:
  friend AsGraph build_graph(std::span<const AsPath> paths);

  static std::uint64_t edge_key(NodeId u, NodeId v);

  std::vector<Asn> asns_;
  std::unordered_map<Asn, NodeId> index_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::vector<NodeId>> transit_;
  std::vector<Edge> edges_;
  std::unordered_map<std::uint64_t, EdgeId> edge_index_;
  std::vector<std::vector<Asn>> edge_observers_;
  std::vector<std::vector<Asn>> node_observers_;
  std::vector<std::vector<std::uint32_t>> vp_distances_;
};

/// Edges are all consecutive hop pairs; adjacent duplicates are ignored.
AsGraph build_graph(std::span<const AsPath> paths);

/// Distinct neighbors of `asn` over all path triplets (x, asn, y). Zero for stubs.
std::size_t transit_degree(const AsGraph& g, Asn asn);

/// ASes at the top of the hierarchy, pairwise adjacent.
struct Clique {
  std::vector<Asn> members;  // ascending

  bool contains(Asn asn) const;
};

/// Greedy clique: rank ASes by transit degree (desc; ties by degree desc, then
/// ASN asc), seed with the first, then scan the next `k_candidates - 1` ranks
/// adding each AS adjacent to every member so far. Only the seed may have
/// zero transit degree, so a star yields just its center.
Clique infer_clique(const AsGraph& g, std::size_t k_candidates = 20);

/// One ASN per line. Every member must be present in `g`.
Clique load_clique(const std::filesystem::path& path, const AsGraph& g);

bool is_pairwise_adjacent(const AsGraph& g, const Clique& clique);

struct CliqueDistances {
  std::vector<double> mean;  // per NodeId
  /// (node, member) pairs with no path; each was charged diameter + 1.
  std::size_t unreachable_pairs = 0;
  std::uint32_t substitute_distance = 0;  // diameter + 1, when used
};

/// Mean BFS distance from every node to the clique members. Runs one BFS per
/// member; `threads` caps parallel workers.
CliqueDistances clique_distances(const AsGraph& g, const Clique& clique, unsigned threads = 1);
double dist_to_clique(const AsGraph& g, const Clique& clique, Asn asn);

/// Largest finite eccentricity over all components.
std::uint32_t graph_diameter(const AsGraph& g, unsigned threads = 1);

/// |N(a) ∩ N(b)| / |N(a) ∪ N(b)| with a and b removed from both sets; 0 for an
/// empty union. Throws std::invalid_argument if (a, b) is not an edge.
double common_neighbor_ratio(const AsGraph& g, Asn a, Asn b);
double common_neighbor_ratio_at(const AsGraph& g, NodeId a, NodeId b);

/// CNR of every edge, indexed by EdgeId.
std::vector<double> edge_cnr(const AsGraph& g);

struct VpStats {
  double mean = 0;
  double min = 0;
  double max = 0;
  std::size_t assign_vp = 0;
  bool observed = false;
};

VpStats vp_stats(const AsGraph& g, Asn asn);
VpStats vp_stats_at(const AsGraph& g, NodeId id);

enum class Hierarchy : std::uint8_t { kNucleus = 0, kMiddle = 1, kShell = 2 };
std::string_view to_string(Hierarchy h);

Hierarchy hierarchy_class(const AsGraph& g, const Clique& clique, Asn asn);

}  // namespace asrel
