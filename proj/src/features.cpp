#include "asrel/features.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "asrel/io.hpp"

namespace asrel {

namespace {

constexpr std::array<std::string_view, 4> kTypeNames = {"transit_access", "content", "enterprise",
                                                        "unknown"};
constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "degree",          "transit_degree",  "dist_to_clique", "dist_to_vp_mean", "dist_to_vp_min",
    "dist_to_vp_max",  "assign_vp",       "hierarchy",      "as_type",         "common_neighbor_ratio"};
constexpr std::array<std::string_view, 3> kHierarchyColumns = {"hier_nucleus", "hier_middle",
                                                               "hier_shell"};
constexpr std::array<std::string_view, 4> kTypeColumns = {"type_transit_access", "type_content",
                                                          "type_enterprise", "type_unknown"};

}  // namespace

std::string_view to_string(AsType t) { return kTypeNames[static_cast<std::size_t>(t)]; }

std::optional<AsType> parse_as_type(std::string_view text) {
  text = io::trim(text);
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == text) return static_cast<AsType>(i);
  }
  return std::nullopt;
}

TypeMap load_type_map(const std::filesystem::path& path) {
  TypeMap types;
  bool first = true;
  io::for_each_data_line(path, [&](std::size_t line, std::string_view body) {
    const auto fields = io::split(body, ',');
    const bool header = first && fields.size() >= 1 && !io::parse_asn(fields[0]);
    first = false;
    if (header) return;
    if (fields.size() < 2) throw ParseError("expected 'asn,type' in " + path.string(), line);
    const auto asn = io::parse_asn(fields[0]);
    const auto type = parse_as_type(fields[1]);
    if (!asn || !type) {
      throw ParseError("invalid type row '" + std::string(body) + "' in " + path.string(), line);
    }
    types[*asn] = *type;
  });
  return types;
}

std::string_view to_string(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

std::array<Feature, kFeatureCount> all_features() {
  std::array<Feature, kFeatureCount> out{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) out[i] = static_cast<Feature>(i);
  return out;
}

FeatureSet FeatureSet::without(Feature f) {
  FeatureSet s;
  s.remove(f);
  return s;
}

double NodeFeatures::scalar(std::size_t i) const {
  switch (i) {
    case 0:
      return degree;
    case 1:
      return transit_degree;
    case 2:
      return dist_to_clique;
    case 3:
      return dist_to_vp_mean;
    case 4:
      return dist_to_vp_min;
    case 5:
      return dist_to_vp_max;
    case 6:
      return assign_vp;
    default:
      throw std::out_of_range("scalar feature index");
  }
}

NodeFeatureTable compute_node_features(const AsGraph& g, const Clique& clique,
                                       const TypeMap& types, unsigned threads) {
  NodeFeatureTable table;
  const auto distances = clique_distances(g, clique, threads);
  table.diagnostics.unreachable_clique_pairs = distances.unreachable_pairs;
  table.rows.resize(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    auto& row = table.rows[v];
    const Asn asn = g.asn(v);
    row.degree = static_cast<double>(g.degree(v));
    row.transit_degree = static_cast<double>(g.transit_neighbors(v).size());
    row.dist_to_clique = distances.mean[v];
    const auto vp = vp_stats_at(g, v);
    if (!vp.observed) ++table.diagnostics.unobserved_nodes;
    row.dist_to_vp_mean = vp.mean;
    row.dist_to_vp_min = vp.min;
    row.dist_to_vp_max = vp.max;
    row.assign_vp = static_cast<double>(vp.assign_vp);
    if (clique.contains(asn)) {
      row.hierarchy = Hierarchy::kNucleus;
    } else {
      row.hierarchy = g.transit_neighbors(v).empty() ? Hierarchy::kShell : Hierarchy::kMiddle;
    }
    const auto it = types.find(asn);
    if (it == types.end()) {
      ++table.diagnostics.untyped_nodes;
      row.as_type = AsType::kUnknown;
    } else {
      row.as_type = it->second;
    }
  }
  return table;
}

FeatureMatrix assemble_features(const NodeFeatureTable& table, const AsGraph& g,
                                const FeatureSet& enabled) {
  FeatureMatrix x;
  const std::size_t n = table.rows.size();
  if (n != g.node_count()) throw std::invalid_argument("feature table does not match graph");

  std::vector<std::size_t> scalars;
  for (std::size_t i = 0; i < kScalarFeatureCount; ++i) {
    if (enabled.has(static_cast<Feature>(i))) scalars.push_back(i);
  }
  const bool hierarchy = enabled.has(Feature::kHierarchy);
  const bool type = enabled.has(Feature::kAsType);
  const std::size_t cols = scalars.size() + (hierarchy ? 3 : 0) + (type ? 4 : 0);

  x.values = RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
  x.asns.assign(g.asns().begin(), g.asns().end());

  Eigen::Index col = 0;
  for (const std::size_t s : scalars) {
    x.columns.emplace_back(kFeatureNames[s]);
    double lo = 0;
    double hi = 0;
    for (std::size_t v = 0; v < n; ++v) {
      const double value = table.rows[v].scalar(s);
      if (v == 0 || value < lo) lo = value;
      if (v == 0 || value > hi) hi = value;
    }
    const double span = hi - lo;
    for (std::size_t v = 0; v < n; ++v) {
      x.values(static_cast<Eigen::Index>(v), col) =
          span > 0 ? (table.rows[v].scalar(s) - lo) / span : 0.0;
    }
    ++col;
  }
  if (hierarchy) {
    for (const auto name : kHierarchyColumns) x.columns.emplace_back(name);
    for (std::size_t v = 0; v < n; ++v) {
      x.values(static_cast<Eigen::Index>(v), col + static_cast<int>(table.rows[v].hierarchy)) = 1.0;
    }
    col += 3;
  }
  if (type) {
    for (const auto name : kTypeColumns) x.columns.emplace_back(name);
    for (std::size_t v = 0; v < n; ++v) {
      x.values(static_cast<Eigen::Index>(v), col + static_cast<int>(table.rows[v].as_type)) = 1.0;
    }
    col += 4;
  }
  return x;
}

FeatureMatrix assemble_features(const AsGraph& g, const Clique& clique, const TypeMap& types,
                                const FeatureSet& enabled) {
  return assemble_features(compute_node_features(g, clique, types), g, enabled);
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& x) {
  out << "asn";
  for (const auto& c : x.columns) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < x.rows(); ++r) {
    out << x.asns[r];
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out << ',' << io::format_double(x.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }
    out << '\n';
  }
}

std::vector<LinkAnalysis> analyze_links(const AsGraph& g, const NodeFeatureTable& table) {
  std::vector<LinkAnalysis> rows;
  rows.reserve(g.edge_count());
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const auto& edge = g.edge(e);
    LinkAnalysis row;
    row.a = g.asn(edge.a);
    row.b = g.asn(edge.b);
    row.cnr = common_neighbor_ratio_at(g, edge.a, edge.b);
    row.edge_assign_vp = g.edge_observers(e).size();
    for (std::size_t s = 0; s < kScalarFeatureCount; ++s) {
      row.diff[s] = link_feature_diff(table.rows[edge.a].scalar(s), table.rows[edge.b].scalar(s));
    }
    rows.push_back(row);
  }
  return rows;
}

void write_link_analysis_csv(std::ostream& out, std::span<const LinkAnalysis> rows) {
  out << "a,b,cnr,edge_assign_vp";
  for (std::size_t s = 0; s < kScalarFeatureCount; ++s) out << ",diff_" << kFeatureNames[s];
  out << '\n';
  for (const auto& r : rows) {
    out << r.a << ',' << r.b << ',' << io::format_double(r.cnr) << ',' << r.edge_assign_vp;
    for (const double d : r.diff) out << ',' << io::format_double(d);
    out << '\n';
  }
}

}  // namespace asrel
