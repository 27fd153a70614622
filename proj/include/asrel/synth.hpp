#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "asrel/core.hpp"
#include "asrel/features.hpp"
#include "asrel/path_ingest.hpp"

namespace asrel {

struct SynthConfig {
  int n_tier1 = 8;
  int n_mid = 150;
  int n_stub = 800;
  int n_ixp = 12;
  int n_orgs = 60;
  int n_vps = 150;
  int paths_per_vp = 0;  // 0: every reachable destination
  std::uint64_t seed = 7;

  int total_nodes() const { return n_tier1 + n_mid + n_stub + n_ixp; }
  /// Throws std::invalid_argument for an infeasible configuration.
  void validate() const;
};

enum class Tier : std::uint8_t { kTier1, kMid, kStub, kIxp };
std::string_view to_string(Tier t);

/// A planted link. For P2C, `a` is the provider.
struct PlantedLink {
  Asn a = 0;
  Asn b = 0;
  RelLabel label = RelLabel::kP2P;
};

struct SynthNode {
  Asn asn = 0;
  Tier tier = Tier::kStub;
  int org = -1;  // -1: no sibling group
  AsType type = AsType::kUnknown;
};

/// Link type seen when walking from one endpoint to the other.
enum class Step : std::uint8_t { kUp, kDown, kPeer, kSibling, kToIxp, kFromIxp };

class GroundTruth {
 public:
  GroundTruth(std::vector<SynthNode> nodes, std::vector<PlantedLink> links);

  std::span<const SynthNode> nodes() const { return nodes_; }
  std::span<const PlantedLink> links() const { return links_; }
  const SynthNode& node(Asn asn) const;
  bool is_ixp(Asn asn) const { return node(asn).tier == Tier::kIxp; }

  /// Planted link between a and b, oriented as stored, if any.
  std::optional<PlantedLink> link(Asn a, Asn b) const;
  /// Step type when moving from `from` to `to`; nullopt for a non-link.
  std::optional<Step> step(Asn from, Asn to) const;

  std::vector<Asn> tier1() const;
  /// Neighbors of `asn` in ascending ASN order with the step type toward each.
  std::span<const std::pair<Asn, Step>> neighbors(Asn asn) const;

 private:
  std::vector<SynthNode> nodes_;
  std::vector<PlantedLink> links_;
  std::unordered_map<Asn, std::size_t> node_index_;
  std::unordered_map<std::uint64_t, std::size_t> link_index_;
  std::vector<std::vector<std::pair<Asn, Step>>> adjacency_;
};

/// Planted hierarchy: a tier-1 P2P mesh, mids and stubs buying transit from
/// higher tiers (provider index always lower, so P2C is acyclic), mid-mid
/// peering, sibling groups among stubs and IXPs attached to mids and stubs.
GroundTruth generate(const SynthConfig& config);

/// True when `hops` follows uphill, at most one peering, then downhill, with
/// sibling links allowed anywhere. Entering and leaving an IXP counts as one
/// peering. Every consecutive pair must be a planted link.
bool is_valley_free(const GroundTruth& truth, std::span<const Asn> hops);

struct SimulationResult {
  std::vector<AsPath> paths;
  std::vector<Asn> vantage_points;
  std::size_t unreachable = 0;  // sampled destinations with no valley-free route
};

/// Each VP routes to its sampled destinations over the shortest valley-free
/// path; ties go to the lowest-ASN first hop.
SimulationResult simulate_paths(const GroundTruth& truth, const SynthConfig& config,
                                unsigned threads = 1);

/// Every planted P2C edge points from a lower to a higher topological rank.
bool p2c_acyclic(const GroundTruth& truth);

struct ExportOptions {
  double perturbation = 0.05;  // per-source P2P/P2C flip probability
  int label_sources = 3;
};

/// Writes paths.txt, alloc.txt, labels_<k>.txt, orgs.csv, ixps.txt, types.csv
/// and answer_key.csv. Label sources cover observed links only: siblings are
/// written as P2C with the smaller ASN as provider and IXP links as P2P.
std::vector<std::filesystem::path> export_synthetic(const GroundTruth& truth,
                                                    const SimulationResult& sim,
                                                    const SynthConfig& config,
                                                    const ExportOptions& options,
                                                    const std::filesystem::path& dir);

}  // namespace asrel
