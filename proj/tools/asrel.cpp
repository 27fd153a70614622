// asrel: command-line front end for the AS relationship toolkit.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "asrel/dataset.hpp"
#include "asrel/eval.hpp"
#include "asrel/features.hpp"
#include "asrel/gcn.hpp"
#include "asrel/io.hpp"
#include "asrel/metrics.hpp"
#include "asrel/pipeline.hpp"
#include "asrel/synth.hpp"
#include "json.hpp"

#ifndef ASREL_VERSION
#define ASREL_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct DataOptions {
  std::string data_dir;
  std::string paths;
  std::string alloc;
  std::vector<std::string> labels;
  std::string orgs;
  std::string ixps;
  std::string types;
  std::string clique;

  asrel::DataFiles resolve(bool need_labels) const {
    asrel::DataFiles f;
    if (!data_dir.empty()) f = asrel::DataFiles::from_directory(data_dir);
    if (!paths.empty()) f.paths = paths;
    if (!alloc.empty()) f.alloc = fs::path(alloc);
    if (!labels.empty()) f.labels.assign(labels.begin(), labels.end());
    if (!orgs.empty()) f.orgs = fs::path(orgs);
    if (!ixps.empty()) f.ixps = fs::path(ixps);
    if (!types.empty()) f.types = fs::path(types);
    if (!clique.empty()) f.clique = fs::path(clique);
    if (f.paths.empty()) throw std::invalid_argument("no paths file: pass --paths or --data");
    for (const auto& p : f.all()) {
      if (!fs::exists(p)) throw std::runtime_error("input file not found: " + p.string());
    }
    if (need_labels && f.labels.size() < 2) {
      throw std::invalid_argument("at least two --labels sources are required");
    }
    return f;
  }
};

struct TrainOptions {
  std::string mode = "multi";
  std::optional<double> lr;
  std::optional<double> wd;
  int epochs = 200;
  std::string blocks;
  int hidden = asrel::kDefaultHidden;
  double delta = asrel::kDefaultWeightFloor;

  asrel::TrainConfig resolve(std::uint64_t seed) const {
    const auto m = asrel::parse_mode(mode);
    if (!m) throw std::invalid_argument("--mode must be 'binary' or 'multi'");
    auto c = asrel::TrainConfig::defaults(*m);
    if (lr) c.learning_rate = *lr;
    if (wd) c.weight_decay = *wd;
    if (!blocks.empty()) c.block_spec = asrel::BlockSpec::parse(blocks);
    c.epochs = epochs;
    c.hidden = hidden;
    c.seed = seed;
    c.validate();
    if (!(delta > 0 && delta <= 1)) throw std::invalid_argument("--delta must be in (0, 1]");
    return c;
  }
};

ordered_json config_json(const asrel::TrainConfig& c, double delta) {
  return {{"mode", std::string(asrel::to_string(c.mode))},
          {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},
          {"blocks", c.block_spec.to_string()},
          {"hidden", c.hidden},
          {"delta", delta},
          {"seed", c.seed}};
}

/// Collects inputs/outputs of one command and writes manifest.json last.
class Run {
 public:
  Run(std::string command, fs::path out_dir)
      : command_(std::move(command)), out_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(out_);
  }

  fs::path output(const std::string& name) {
    outputs_.push_back(out_ / name);
    return outputs_.back();
  }
  void write_text(const std::string& name, const std::string& text) {
    auto out = asrel::io::open_output(output(name));
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
  }
  void input(const fs::path& p) { inputs_.push_back(p); }
  void inputs(const std::vector<fs::path>& ps) { inputs_.insert(inputs_.end(), ps.begin(), ps.end()); }
  ordered_json& config() { return config_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  void finish() {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    ordered_json m;
    m["command"] = command_;
    m["version"] = ASREL_VERSION;
    m["config"] = config_;
    m["seed"] = seed_ ? ordered_json(*seed_) : ordered_json();
    auto digest_list = [](const std::vector<fs::path>& files) {
      ordered_json list = ordered_json::array();
      for (const auto& f : files) list.push_back({{"path", f.string()}, {"sha256", asrel::io::sha256_file(f)}});
      return list;
    };
    m["inputs"] = digest_list(inputs_);
    m["outputs"] = digest_list(outputs_);
    m["wall_time_seconds"] = wall;
    auto out = asrel::io::open_output(out_ / "manifest.json");
    out << m.dump(2) << '\n';
  }

 private:
  std::string command_;
  fs::path out_;
  std::chrono::steady_clock::time_point start_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
  ordered_json config_ = ordered_json::object();
  std::optional<std::uint64_t> seed_;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--data", d.data_dir, "Directory with paths.txt, labels_*.txt, orgs.csv, ...");
  cmd->add_option("--paths", d.paths, "AS paths file (pipe-separated, VP first)");
  cmd->add_option("--alloc", d.alloc, "Allocated ASN ranges");
  cmd->add_option("--labels", d.labels, "Label source file a|b|code (repeatable)")->take_all();
  cmd->add_option("--orgs", d.orgs, "Organization map CSV asn,org_id");
  cmd->add_option("--ixps", d.ixps, "IXP ASN list");
  cmd->add_option("--types", d.types, "AS type CSV asn,type");
  cmd->add_option("--clique", d.clique, "Clique override, one ASN per line");
}

void add_train_options(CLI::App* cmd, TrainOptions& t) {
  cmd->add_option("--mode", t.mode, "binary or multi")->capture_default_str();
  cmd->add_option("--lr", t.lr, "Learning rate (mode default)");
  cmd->add_option("--wd", t.wd, "Weight decay (mode default)");
  cmd->add_option("--epochs", t.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--blocks", t.blocks, "Block spec AxB (mode default)");
  cmd->add_option("--hidden", t.hidden, "Hidden width")->capture_default_str();
  cmd->add_option("--delta", t.delta, "Edge-weight floor")->capture_default_str();
}

struct Loaded {
  asrel::DataFiles files;
  asrel::PreparedGraph prepared;
};

Loaded load_graph(const DataOptions& d, bool need_labels, unsigned threads, Run& run) {
  Loaded l;
  l.files = d.resolve(need_labels);
  run.inputs(l.files.all());
  auto ingest = asrel::ingest_paths(l.files);
  l.prepared = asrel::prepare_graph(ingest.paths, l.files, threads);
  l.prepared.ingest = ingest.report;
  return l;
}

asrel::LabeledEdgeSet load_or_build_split(const Loaded& l, const std::string& dataset_file,
                                          std::uint64_t seed, asrel::Mode mode, Run& run) {
  if (!dataset_file.empty()) {
    run.input(dataset_file);
    return asrel::read_dataset_csv(dataset_file);
  }
  const auto build = asrel::build_dataset(l.files, l.prepared.graph);
  auto split = asrel::balance_and_split(build.labeled, seed, mode);
  auto out = asrel::io::open_output(run.output("dataset.csv"));
  asrel::write_dataset_csv(out, split);
  return split;
}

void write_metrics(Run& run, const asrel::ConfusionMatrix& cm, const asrel::Baselines* baselines) {
  {
    auto out = asrel::io::open_output(run.output("confusion.csv"));
    asrel::write_confusion_matrix(out, cm);
  }
  auto j = ordered_json::parse(asrel::confusion_matrix_json(cm));
  if (baselines) {
    j["baselines"] = {{"majority", baselines->majority}, {"degree_difference", baselines->degree_difference}};
  }
  run.write_text("metrics.json", j.dump(2));
  asrel::write_confusion_matrix(std::cout, cm);
  std::cout << "test accuracy " << asrel::io::format_double(cm.total() ? asrel::overall_accuracy(cm) : 0.0)
            << '\n';
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto part : asrel::io::split(text, ',')) {
    part = asrel::io::trim(part);
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const char* flag) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) {
    const auto v = asrel::io::parse_double(s);
    if (!v) throw std::invalid_argument(std::string(flag) + ": not a number: " + s);
    out.push_back(*v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infer business relationships between autonomous systems from BGP paths."};
  app.set_version_flag("--version", std::string(ASREL_VERSION));
  app.require_subcommand(1);

  DataOptions data;
  TrainOptions topt;
  std::string out_dir;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  std::string dataset_file;
  std::string checkpoint_file;
  std::string pairs_file;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "Output directory")->required();
    cmd->add_option("--threads", threads, "Worker thread cap")->capture_default_str();
  };

  auto* ingest = app.add_subcommand("ingest", "Parse and sanitize AS paths");
  ingest->add_option("--paths", data.paths, "AS paths file")->required();
  ingest->add_option("--alloc", data.alloc, "Allocated ASN ranges");
  common(ingest);

  auto* features = app.add_subcommand("features", "Build the AS graph and export node and link features");
  add_data_options(features, data);
  common(features);

  auto* dataset = app.add_subcommand("dataset", "Vote labels, add sibling/IXP labels, balance and split");
  add_data_options(dataset, data);
  dataset->add_option("--mode", topt.mode, "binary or multi")->capture_default_str();
  dataset->add_option("--seed", seed, "Random seed")->capture_default_str();
  common(dataset);

  auto* trainc = app.add_subcommand("train", "Train the GCN edge classifier");
  add_data_options(trainc, data);
  add_train_options(trainc, topt);
  trainc->add_option("--seed", seed, "Random seed")->capture_default_str();
  trainc->add_option("--dataset", dataset_file, "Pre-built dataset CSV (default: build from labels)");
  common(trainc);

  auto* predictc = app.add_subcommand("predict", "Label AS pairs with a trained checkpoint");
  add_data_options(predictc, data);
  predictc->add_option("--checkpoint", checkpoint_file, "Checkpoint JSON")->required();
  predictc->add_option("--pairs", pairs_file, "CSV or pipe list of a,b pairs (default: every graph edge)");
  common(predictc);

  auto* evalc = app.add_subcommand("eval", "Score a checkpoint on the test split");
  add_data_options(evalc, data);
  evalc->add_option("--checkpoint", checkpoint_file, "Checkpoint JSON")->required();
  evalc->add_option("--dataset", dataset_file, "Dataset CSV with splits")->required();
  common(evalc);

  auto* importance = app.add_subcommand("importance", "Leave-one-feature-out importance scores");
  add_data_options(importance, data);
  add_train_options(importance, topt);
  importance->add_option("--seed", seed, "Random seed")->capture_default_str();
  importance->add_option("--dataset", dataset_file, "Pre-built dataset CSV");
  common(importance);

  std::string grid_lr, grid_wd, grid_blocks, grid_hidden;
  auto* sweepc = app.add_subcommand("sweep", "Grid search over training hyperparameters");
  add_data_options(sweepc, data);
  add_train_options(sweepc, topt);
  sweepc->add_option("--seed", seed, "Random seed")->capture_default_str();
  sweepc->add_option("--dataset", dataset_file, "Pre-built dataset CSV");
  sweepc->add_option("--grid-lr", grid_lr, "Comma-separated learning rates");
  sweepc->add_option("--grid-wd", grid_wd, "Comma-separated weight decays");
  sweepc->add_option("--grid-blocks", grid_blocks, "Comma-separated block specs, e.g. 2x1,2x2");
  sweepc->add_option("--grid-hidden", grid_hidden, "Comma-separated hidden widths");
  common(sweepc);

  asrel::SynthConfig sc;
  asrel::ExportOptions eo;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic topology with planted relationships");
  synth->add_option("--seed", seed, "Random seed")->capture_default_str();
  synth->add_option("--tier1", sc.n_tier1, "Tier-1 ASes")->capture_default_str();
  synth->add_option("--mid", sc.n_mid, "Mid-tier ASes")->capture_default_str();
  synth->add_option("--stub", sc.n_stub, "Stub ASes")->capture_default_str();
  synth->add_option("--ixp", sc.n_ixp, "IXPs")->capture_default_str();
  synth->add_option("--orgs", sc.n_orgs, "Sibling groups")->capture_default_str();
  synth->add_option("--vps", sc.n_vps, "Vantage points")->capture_default_str();
  synth->add_option("--paths-per-vp", sc.paths_per_vp, "Destinations per VP (0 = all)")->capture_default_str();
  synth->add_option("--perturbation", eo.perturbation, "Label flip rate per source")->capture_default_str();
  common(synth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*ingest) {
      Run run("ingest", out_dir);
      const auto files = data.resolve(false);
      run.inputs(files.all());
      const auto result = asrel::ingest_paths(files);
      {
        auto out = asrel::io::open_output(run.output("clean_paths.txt"));
        asrel::write_paths(out, result.paths);
      }
      run.write_text("ingest_report.json", result.report.to_json());
      std::cout << result.report.to_text();
      run.finish();
    } else if (*features) {
      Run run("features", out_dir);
      const auto l = load_graph(data, false, threads, run);
      const auto x = asrel::assemble_features(l.prepared.features, l.prepared.graph);
      {
        auto out = asrel::io::open_output(run.output("features.csv"));
        asrel::write_feature_csv(out, x);
      }
      {
        auto out = asrel::io::open_output(run.output("links.csv"));
        asrel::write_link_analysis_csv(out, asrel::analyze_links(l.prepared.graph, l.prepared.features));
      }
      {
        auto out = asrel::io::open_output(run.output("clique.txt"));
        for (const auto a : l.prepared.clique.members) out << a << '\n';
      }
      const auto& d = l.prepared.features.diagnostics;
      ordered_json summary = {{"nodes", l.prepared.graph.node_count()},
                              {"edges", l.prepared.graph.edge_count()},
                              {"clique_size", l.prepared.clique.members.size()},
                              {"unreachable_clique_pairs", d.unreachable_clique_pairs},
                              {"unobserved_nodes", d.unobserved_nodes},
                              {"untyped_nodes", d.untyped_nodes},
                              {"ingest", ordered_json::parse(l.prepared.ingest.to_json())}};
      run.write_text("graph_summary.json", summary.dump(2));
      std::cout << summary.dump(2) << '\n';
      run.finish();
    } else if (*dataset) {
      Run run("dataset", out_dir);
      const auto mode = asrel::parse_mode(topt.mode);
      if (!mode) throw std::invalid_argument("--mode must be 'binary' or 'multi'");
      run.set_seed(seed);
      run.config() = {{"mode", topt.mode}};
      const auto l = load_graph(data, true, threads, run);
      const auto build = asrel::build_dataset(l.files, l.prepared.graph);
      const auto split = asrel::balance_and_split(build.labeled, seed, *mode);
      {
        auto out = asrel::io::open_output(run.output("dataset.csv"));
        asrel::write_dataset_csv(out, split);
      }
      auto vote = ordered_json::parse(build.vote.to_json());
      vote["dropped_off_graph"] = build.dropped_off_graph;
      const auto counts = build.labeled.label_counts();
      for (int k = 0; k < asrel::kRelLabelCount; ++k) {
        vote["labeled"][std::string(asrel::to_string(asrel::label_from_class(k)))] = counts[static_cast<std::size_t>(k)];
      }
      vote["balanced_total"] = split.size();
      run.write_text("vote_report.json", vote.dump(2));
      std::cout << vote.dump(2) << '\n';
      run.finish();
    } else if (*trainc) {
      Run run("train", out_dir);
      const auto config = topt.resolve(seed);
      run.set_seed(seed);
      run.config() = config_json(config, topt.delta);
      const auto l = load_graph(data, dataset_file.empty(), threads, run);
      const auto split = load_or_build_split(l, dataset_file, seed, config.mode, run);
      const auto result = asrel::run_experiment(l.prepared, split, config, {}, topt.delta);
      asrel::Checkpoint ck{result.training.model,
                           {config.mode, topt.delta, true, seed, result.training.best_epoch, result.feature_columns}};
      asrel::save_checkpoint(run.output("checkpoint.json"), ck);
      {
        auto out = asrel::io::open_output(run.output("history.csv"));
        asrel::write_history_csv(out, result.training.history);
      }
      const auto baselines = asrel::compute_baselines(l.prepared, split, config.mode);
      write_metrics(run, result.test_confusion, &baselines);
      std::cout << "best epoch " << result.training.best_epoch << ", val accuracy "
                << asrel::io::format_double(result.val_accuracy) << '\n';
      run.finish();
    } else if (*predictc || *evalc) {
      Run run(*predictc ? "predict" : "eval", out_dir);
      run.input(checkpoint_file);
      const auto ck = asrel::load_checkpoint(checkpoint_file);
      run.set_seed(ck.meta.seed);
      run.config() = {{"checkpoint", checkpoint_file}};
      const auto l = load_graph(data, false, threads, run);
      const auto full = asrel::assemble_features(l.prepared.features, l.prepared.graph);
      const auto x = asrel::select_columns(full, ck.meta.feature_columns);
      const auto adj = asrel::adjacency_for(l.prepared, ck.meta.cnr_weights, ck.meta.weight_floor);
      const auto& g = l.prepared.graph;
      if (*evalc) {
        run.input(dataset_file);
        const auto split = asrel::read_dataset_csv(dataset_file);
        const auto test = asrel::make_batch(g, split, asrel::Split::kTest);
        const auto pred = asrel::predict(ck.model, adj, x, test.edges);
        const auto cm = asrel::ConfusionMatrix::from_predictions(test.labels, pred.labels,
                                                                 asrel::class_count(ck.meta.mode));
        const auto baselines = asrel::compute_baselines(l.prepared, split, ck.meta.mode);
        write_metrics(run, cm, &baselines);
      } else {
        std::vector<asrel::EdgePair> pairs;
        if (pairs_file.empty()) {
          for (const auto& e : g.edges()) pairs.push_back({e.a, e.b});
        } else {
          run.input(pairs_file);
          asrel::io::for_each_data_line(pairs_file, [&](std::size_t line, std::string_view body) {
            const char delim = body.find('|') != std::string_view::npos ? '|' : ',';
            const auto f = asrel::io::split(body, delim);
            const auto a = f.size() >= 2 ? asrel::io::parse_asn(f[0]) : std::nullopt;
            const auto b = f.size() >= 2 ? asrel::io::parse_asn(f[1]) : std::nullopt;
            if (!a || !b) {
              if (line == 1) return;  // header
              throw asrel::ParseError("expected 'a,b' in " + pairs_file, line);
            }
            const auto u = g.find(*a);
            const auto v = g.find(*b);
            if (!u || !v) {
              throw std::invalid_argument("AS" + std::to_string(!u ? *a : *b) + " is not in the AS graph");
            }
            pairs.push_back({*u, *v});
          });
        }
        const auto pred = asrel::predict(ck.model, adj, x, pairs);
        auto out = asrel::io::open_output(run.output("predictions.csv"));
        out << "a,b,label";
        for (int k = 0; k < ck.model.dims().classes; ++k) {
          out << ",logp_" << asrel::to_string(asrel::label_from_class(k));
        }
        out << '\n';
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          out << g.asn(pairs[i].src) << ',' << g.asn(pairs[i].dst) << ','
              << asrel::to_string(asrel::label_from_class(pred.labels[i]));
          for (int k = 0; k < ck.model.dims().classes; ++k) {
            out << ',' << asrel::io::format_double(pred.log_probs(static_cast<Eigen::Index>(i), k));
          }
          out << '\n';
        }
        std::cout << "predicted " << pairs.size() << " links\n";
      }
      run.finish();
    } else if (*importance) {
      Run run("importance", out_dir);
      const auto config = topt.resolve(seed);
      run.set_seed(seed);
      run.config() = config_json(config, topt.delta);
      const auto l = load_graph(data, dataset_file.empty(), threads, run);
      const auto split = load_or_build_split(l, dataset_file, seed, config.mode, run);
      const auto report = asrel::feature_importance(l.prepared, split, config, topt.delta, threads);
      run.write_text("importance.json", report.to_json());
      {
        auto out = asrel::io::open_output(run.output("importance.csv"));
        report.write_csv(out);
      }
      report.write_csv(std::cout);
      if (report.degenerate) std::cout << "degenerate: every ablation matched the baseline accuracy\n";
      run.finish();
    } else if (*sweepc) {
      Run run("sweep", out_dir);
      const auto base = topt.resolve(seed);
      asrel::SweepGrid grid;
      grid.learning_rates = parse_doubles(grid_lr, "--grid-lr");
      grid.weight_decays = parse_doubles(grid_wd, "--grid-wd");
      for (const auto& s : split_list(grid_blocks)) grid.block_specs.push_back(asrel::BlockSpec::parse(s));
      for (const auto& s : split_list(grid_hidden)) {
        const auto v = asrel::io::parse_int(s);
        if (!v || *v < 1) throw std::invalid_argument("--grid-hidden: invalid width " + s);
        grid.hidden.push_back(static_cast<int>(*v));
      }
      run.set_seed(seed);
      run.config() = config_json(base, topt.delta);
      run.config()["grid"] = {{"lr", grid_lr}, {"wd", grid_wd}, {"blocks", grid_blocks}, {"hidden", grid_hidden}};
      const auto l = load_graph(data, dataset_file.empty(), threads, run);
      const auto split = load_or_build_split(l, dataset_file, seed, base.mode, run);
      const auto report = asrel::sweep(l.prepared, split, grid, base, topt.delta, threads);
      run.write_text("sweep.json", report.to_json());
      {
        auto out = asrel::io::open_output(run.output("sweep.csv"));
        report.write_csv(out);
      }
      report.write_csv(std::cout);
      run.finish();
    } else if (*synth) {
      Run run("synth", out_dir);
      sc.seed = seed;
      run.set_seed(seed);
      run.config() = {{"tier1", sc.n_tier1}, {"mid", sc.n_mid},       {"stub", sc.n_stub},
                      {"ixp", sc.n_ixp},     {"orgs", sc.n_orgs},     {"vps", sc.n_vps},
                      {"paths_per_vp", sc.paths_per_vp}, {"perturbation", eo.perturbation}};
      const auto truth = asrel::generate(sc);
      const auto sim = asrel::simulate_paths(truth, sc, threads);
      for (const auto& p : asrel::export_synthetic(truth, sim, sc, eo, out_dir)) {
        run.output(p.filename().string());
      }
      std::cout << "nodes " << truth.nodes().size() << ", links " << truth.links().size() << ", paths "
                << sim.paths.size() << ", unreachable " << sim.unreachable << '\n';
      run.finish();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
