#pragma once

#include <array>
#include <bitset>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "asrel/matrix.hpp"
#include "asrel/topo_graph.hpp"

namespace asrel {

/// Business type, following the CAIDA AS-classification categories.
enum class AsType : std::uint8_t { kTransitAccess = 0, kContent = 1, kEnterprise = 2, kUnknown = 3 };
std::string_view to_string(AsType t);
std::optional<AsType> parse_as_type(std::string_view text);

using TypeMap = std::unordered_map<Asn, AsType>;

/// CSV `asn,type`; an optional header row is skipped.
TypeMap load_type_map(const std::filesystem::path& path);

/// The ten ablatable inputs. The first seven are scalar node columns,
/// Hierarchy and AsType are one-hot groups, and CommonNeighborRatio is the
/// edge weighting of the propagation matrix.
enum class Feature : std::uint8_t {
  kDegree,
  kTransitDegree,
  kDistToClique,
  kDistToVpMean,
  kDistToVpMin,
  kDistToVpMax,
  kAssignVp,
  kHierarchy,
  kAsType,
  kCommonNeighborRatio,
};
inline constexpr std::size_t kFeatureCount = 10;
inline constexpr std::size_t kScalarFeatureCount = 7;
inline constexpr std::size_t kFullFeatureDim = 14;

std::string_view to_string(Feature f);
std::array<Feature, kFeatureCount> all_features();

/// Set of enabled features. Default-constructed = everything enabled.
class FeatureSet {
 public:
  FeatureSet() { bits_.set(); }
  static FeatureSet all() { return {}; }
  static FeatureSet without(Feature f);

  bool has(Feature f) const { return bits_.test(static_cast<std::size_t>(f)); }
  void remove(Feature f) { bits_.reset(static_cast<std::size_t>(f)); }

 private:
  std::bitset<kFeatureCount> bits_;
};

/// Raw (unnormalized) per-node features.
struct NodeFeatures {
  double degree = 0;
  double transit_degree = 0;
  double dist_to_clique = 0;
  double dist_to_vp_mean = 0;
  double dist_to_vp_min = 0;
  double dist_to_vp_max = 0;
  double assign_vp = 0;
  Hierarchy hierarchy = Hierarchy::kShell;
  AsType as_type = AsType::kUnknown;

  double scalar(std::size_t i) const;
};

struct FeatureDiagnostics {
  std::size_t unreachable_clique_pairs = 0;
  std::size_t unobserved_nodes = 0;
  std::size_t untyped_nodes = 0;
};

struct NodeFeatureTable {
  std::vector<NodeFeatures> rows;  // per NodeId
  FeatureDiagnostics diagnostics;
};

NodeFeatureTable compute_node_features(const AsGraph& g, const Clique& clique,
                                       const TypeMap& types, unsigned threads = 1);

/// Node feature matrix X: one row per NodeId, columns named in `columns`.
struct FeatureMatrix {
  RowMatrix values;
  std::vector<std::string> columns;
  std::vector<Asn> asns;  // row -> ASN

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

/// Scalar columns are min-max normalized over all nodes (a constant column
/// maps to 0), followed by the hierarchy and type one-hot groups. Features
/// absent from `enabled` are dropped; CommonNeighborRatio does not affect X.
FeatureMatrix assemble_features(const NodeFeatureTable& table, const AsGraph& g,
                                const FeatureSet& enabled = {});
FeatureMatrix assemble_features(const AsGraph& g, const Clique& clique, const TypeMap& types,
                                const FeatureSet& enabled = {});

void write_feature_csv(std::ostream& out, const FeatureMatrix& x);

inline double link_feature_diff(double f_a, double f_b) { return f_a > f_b ? f_a - f_b : f_b - f_a; }

/// Per-edge analysis row: link differences of the scalar features plus the
/// edge-level CNR and number of distinct VPs observing the link.
struct LinkAnalysis {
  Asn a = 0;
  Asn b = 0;
  double cnr = 0;
  std::size_t edge_assign_vp = 0;
  std::array<double, kScalarFeatureCount> diff{};
};

std::vector<LinkAnalysis> analyze_links(const AsGraph& g, const NodeFeatureTable& table);
void write_link_analysis_csv(std::ostream& out, std::span<const LinkAnalysis> rows);

}  // namespace asrel
