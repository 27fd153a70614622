#include "asrel/pipeline.hpp"

#include <algorithm>
#include <stdexcept>

namespace asrel {

namespace fs = std::filesystem;

DataFiles DataFiles::from_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("data directory not found: " + dir.string());
  DataFiles f;
  f.paths = dir / "paths.txt";
  if (!fs::exists(f.paths)) throw std::runtime_error("missing paths file: " + f.paths.string());
  auto optional_file = [&](const char* name) -> std::optional<fs::path> {
    const auto p = dir / name;
    return fs::exists(p) ? std::optional<fs::path>(p) : std::nullopt;
  };
  f.alloc = optional_file("alloc.txt");
  f.orgs = optional_file("orgs.csv");
  f.ixps = optional_file("ixps.txt");
  f.types = optional_file("types.csv");
  f.clique = optional_file("clique.txt");
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("labels_") && name.ends_with(".txt")) {
      f.labels.push_back(entry.path());
    }
  }
  std::sort(f.labels.begin(), f.labels.end());
  return f;
}

std::vector<fs::path> DataFiles::all() const {
  std::vector<fs::path> out{paths};
  for (const auto* p : {&alloc, &orgs, &ixps, &types, &clique}) {
    if (*p) out.push_back(**p);
  }
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

IngestResult ingest_paths(const DataFiles& files) {
  std::optional<AllocationTable> table;
  if (files.alloc) table = AllocationTable::load(*files.alloc);
  return ingest_file(files.paths, table ? &*table : nullptr);
}

PreparedGraph prepare_graph(std::span<const AsPath> paths, const DataFiles& files, unsigned threads) {
  PreparedGraph p;
  p.graph = build_graph(paths);
  if (p.graph.node_count() == 0) throw std::runtime_error("no usable paths: the AS graph is empty");
  p.clique = files.clique ? load_clique(*files.clique, p.graph) : infer_clique(p.graph);
  const TypeMap types = files.types ? load_type_map(*files.types) : TypeMap{};
  p.features = compute_node_features(p.graph, p.clique, types, threads);
  p.cnr = edge_cnr(p.graph);
  return p;
}

DatasetBuild build_dataset(const DataFiles& files, const AsGraph& graph) {
  std::vector<LabelSource> sources;
  for (const auto& path : files.labels) sources.push_back(load_label_source(path));
  auto voted = vote_intersection(sources);

  DatasetBuild out;
  out.vote = voted.report;
  std::unordered_set<std::uint64_t> seen;
  auto key = [](Asn a, Asn b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
  };
  for (const auto& e : voted.set.entries) {
    const auto u = graph.find(e.a);
    const auto v = graph.find(e.b);
    if (!u || !v || !graph.has_edge(*u, *v)) {
      ++out.dropped_off_graph;
      continue;
    }
    out.labeled.entries.push_back(e);
    seen.insert(key(e.a, e.b));
  }

  const OrgMap orgs = files.orgs ? load_org_map(*files.orgs) : OrgMap{};
  const IxpSet ixps = files.ixps ? load_ixp_list(*files.ixps) : IxpSet{};
  for (const auto& edge : graph.edges()) {
    const Asn a = graph.asn(edge.a);
    const Asn b = graph.asn(edge.b);
    if (seen.contains(key(a, b))) continue;
    const auto oa = orgs.find(a);
    const auto ob = orgs.find(b);
    const bool sibling = oa != orgs.end() && ob != orgs.end() && oa->second == ob->second;
    if (sibling || ixps.contains(a) || ixps.contains(b)) {
      // Placeholder label; the passes below assign S2S or X2X.
      out.labeled.entries.push_back(make_labeled_edge(a, b, RelLabel::kP2P, Provenance::kOrgMap));
    }
  }
  out.labeled = apply_ixp_labels(apply_sibling_labels(std::move(out.labeled), orgs), ixps);
  std::sort(out.labeled.entries.begin(), out.labeled.entries.end(),
            [](const LabeledEdge& x, const LabeledEdge& y) {
              return std::pair(std::min(x.a, x.b), std::max(x.a, x.b)) <
                     std::pair(std::min(y.a, y.b), std::max(y.a, y.b));
            });
  return out;
}

EdgeBatch make_batch(const AsGraph& graph, const LabeledEdgeSet& set, Split split) {
  EdgeBatch batch;
  for (const auto& e : set.entries) {
    if (e.split != split) continue;
    batch.edges.push_back({graph.index_of(e.a), graph.index_of(e.b)});
    batch.labels.push_back(class_index(e.label));
  }
  return batch;
}

NormalizedAdjacency adjacency_for(const PreparedGraph& prepared, bool cnr_weights, double weight_floor) {
  return cnr_weights ? build_normalized_adjacency(prepared.graph, prepared.cnr, weight_floor)
                     : build_normalized_adjacency(prepared.graph, std::span<const double>{}, weight_floor);
}

ExperimentResult run_experiment(const PreparedGraph& prepared, const LabeledEdgeSet& split_set,
                                const TrainConfig& config, const FeatureSet& features,
                                double weight_floor) {
  const auto x = assemble_features(prepared.features, prepared.graph, features);
  const auto adj = adjacency_for(prepared, features.has(Feature::kCommonNeighborRatio), weight_floor);
  const auto train_set = make_batch(prepared.graph, split_set, Split::kTrain);
  const auto val_set = make_batch(prepared.graph, split_set, Split::kVal);
  const auto test_set = make_batch(prepared.graph, split_set, Split::kTest);
  const int classes = class_count(config.mode);
  for (const auto* b : {&train_set, &val_set, &test_set}) {
    for (const int l : b->labels) {
      if (l >= classes) throw std::invalid_argument("dataset has labels outside " + std::string(to_string(config.mode)) + " mode");
    }
  }

  ExperimentResult r;
  r.feature_columns = x.columns;
  r.training = train(adj, x.values, train_set, val_set, config);
  r.val_accuracy = r.training.best_val_accuracy;
  const auto pred = predict(r.training.model, adj, x.values, test_set.edges);
  r.test_confusion = ConfusionMatrix::from_predictions(test_set.labels, pred.labels, classes);
  r.test_accuracy = test_set.size() ? overall_accuracy(r.test_confusion) : 0.0;
  return r;
}

Baselines compute_baselines(const PreparedGraph& prepared, const LabeledEdgeSet& split_set, Mode mode) {
  const auto& g = prepared.graph;
  const int classes = class_count(mode);
  auto diffs_of = [&](const EdgeBatch& b) {
    std::vector<double> d;
    for (const auto& e : b.edges) {
      d.push_back(link_feature_diff(static_cast<double>(g.degree(e.src)), static_cast<double>(g.degree(e.dst))));
    }
    return d;
  };
  const auto train_set = make_batch(g, split_set, Split::kTrain);
  const auto test_set = make_batch(g, split_set, Split::kTest);
  if (train_set.size() == 0 || test_set.size() == 0) {
    throw std::invalid_argument("baselines need non-empty train and test splits");
  }

  Baselines b;
  std::vector<std::size_t> counts(static_cast<std::size_t>(classes), 0);
  for (const int l : train_set.labels) ++counts[static_cast<std::size_t>(l)];
  const auto majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  std::vector<int> constant(test_set.size(), majority);
  b.majority = accuracy(constant, test_set.labels);

  b.degree_model = fit_degree_baseline(diffs_of(train_set), train_set.labels, classes);
  std::vector<int> predicted;
  for (const double d : diffs_of(test_set)) predicted.push_back(b.degree_model.predict(d));
  b.degree_difference = accuracy(predicted, test_set.labels);
  return b;
}

RowMatrix select_columns(const FeatureMatrix& x, std::span<const std::string> columns) {
  RowMatrix out(x.values.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto it = std::find(x.columns.begin(), x.columns.end(), columns[c]);
    if (it == x.columns.end()) throw std::invalid_argument("unknown feature column '" + columns[c] + "'");
    out.col(static_cast<Eigen::Index>(c)) = x.values.col(it - x.columns.begin());
  }
  return out;
}

}  // namespace asrel
