#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "asrel/dataset.hpp"
#include "asrel/features.hpp"
#include "asrel/gcn.hpp"
#include "asrel/metrics.hpp"
#include "asrel/path_ingest.hpp"
#include "asrel/topo_graph.hpp"

namespace asrel {

/// Input file locations. Optional members are skipped when unset.
struct DataFiles {
  std::filesystem::path paths;
  std::optional<std::filesystem::path> alloc;
  std::vector<std::filesystem::path> labels;
  std::optional<std::filesystem::path> orgs;
  std::optional<std::filesystem::path> ixps;
  std::optional<std::filesystem::path> types;
  std::optional<std::filesystem::path> clique;

  /// Standard names used by `synth`: paths.txt, alloc.txt, labels_*.txt,
  /// orgs.csv, ixps.txt, types.csv, clique.txt. Only paths.txt is required.
  static DataFiles from_directory(const std::filesystem::path& dir);

  /// Every file that exists, for manifest digests.
  std::vector<std::filesystem::path> all() const;
};

/// Graph plus everything the model needs from it.
struct PreparedGraph {
  AsGraph graph;
  Clique clique;
  NodeFeatureTable features;
  std::vector<double> cnr;  // per EdgeId
  IngestReport ingest;
};

IngestResult ingest_paths(const DataFiles& files);

PreparedGraph prepare_graph(std::span<const AsPath> paths, const DataFiles& files,
                            unsigned threads = 1);

struct DatasetBuild {
  LabeledEdgeSet labeled;  // voted + sibling + IXP labels, before balancing
  VoteReport vote;
  std::size_t dropped_off_graph = 0;  // voted pairs that are not graph edges
};

/// Voted labels restricted to graph edges, then every graph edge inside one
/// organization or touching an IXP is added and relabeled S2S / X2X.
DatasetBuild build_dataset(const DataFiles& files, const AsGraph& graph);

/// Edge batch of one split, oriented as stored (P2C provider first).
EdgeBatch make_batch(const AsGraph& graph, const LabeledEdgeSet& set, Split split);

struct ExperimentResult {
  TrainResult training;
  std::vector<std::string> feature_columns;
  double val_accuracy = 0;
  double test_accuracy = 0;
  ConfusionMatrix test_confusion{2};
};

/// Assembles X under `features`, builds Â (CNR weights unless the feature set
/// drops them), trains and evaluates on the test split.
ExperimentResult run_experiment(const PreparedGraph& prepared, const LabeledEdgeSet& split_set,
                                const TrainConfig& config, const FeatureSet& features = {},
                                double weight_floor = kDefaultWeightFloor);

/// Reference classifiers scored on the test split: always predicting the most
/// common training class, and a degree-difference threshold model fit on train.
struct Baselines {
  double majority = 0;
  double degree_difference = 0;
  DegreeBaseline degree_model;
};

Baselines compute_baselines(const PreparedGraph& prepared, const LabeledEdgeSet& split_set, Mode mode);

/// Columns of `x` named in `columns`, in that order. Throws for an unknown name.
RowMatrix select_columns(const FeatureMatrix& x, std::span<const std::string> columns);

NormalizedAdjacency adjacency_for(const PreparedGraph& prepared, bool cnr_weights, double weight_floor);

}  // namespace asrel
