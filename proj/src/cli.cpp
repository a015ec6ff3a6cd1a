#include "tascom/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tascom/data_io.hpp"
#include "tascom/error.hpp"
#include "tascom/leiden.hpp"
#include "tascom/metrics.hpp"
#include "tascom/pipeline.hpp"
#include "tascom/refine.hpp"
#include "tascom/seed.hpp"

namespace tascom {

namespace fs = std::filesystem;

namespace {

struct DataFlags {
  std::string edges;
  std::string attrs;
  std::string labels;
};

void add_data_flags(CLI::App* cmd, DataFlags& f, bool labels_required) {
  cmd->add_option("--edges", f.edges, "Edge list, one 'u v' pair per line")->required();
  cmd->add_option("--attrs", f.attrs, "Node attributes (dense CSV or 'id index value' triplets); "
                                      "adjacency rows are used when omitted");
  auto* labels = cmd->add_option("--labels", f.labels, "Human labels, one 'id label' pair per line");
  if (labels_required) labels->required();
}

void require_file(const std::string& flag, const std::string& path) {
  if (path.empty()) return;
  if (!fs::is_regular_file(path)) throw DataError(fmt::format("{}: file '{}' not found", flag, path));
}

DatasetBundle load(const DataFlags& f) {
  require_file("--edges", f.edges);
  require_file("--attrs", f.attrs);
  require_file("--labels", f.labels);
  return load_dataset(f.edges, f.attrs, f.labels);
}

// Pipeline flags. Values are applied on top of the config file only when given.
struct RunFlags {
  std::string config;
  std::string network;
  double mu = 0.0;
  int epochs = 0;
  std::uint64_t seed = 0;
  double lr = 0.0;
  int leiden_runs = 0;
  int refine_runs = 0;
  std::string threshold_rule;
  double birch_threshold = 0.0;
  std::size_t birch_branching = 0;
  std::vector<std::size_t> layers;
  unsigned parallel = 1;
  std::string mode;
  std::map<std::string, CLI::Option*> opts;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_mode) {
  f.opts["config"] = cmd->add_option("--config", f.config, "JSON run config (flags take precedence)");
  f.opts["network"] = cmd->add_option("--network", f.network, "Use the mu preset of a benchmark network")
                          ->check(CLI::IsMember({"cora", "citeseer", "amazon-photo", "amazon-pc", "coauthor-cs",
                                                 "coauthor-phy"}));
  f.opts["mu"] = cmd->add_option("--mu", f.mu, "Weight of the label term (default 0.5)");
  f.opts["epochs"] = cmd->add_option("--epochs", f.epochs, "Training epochs (default 300)");
  f.opts["seed"] = cmd->add_option("--seed", f.seed, "Master seed (default 0)");
  f.opts["lr"] = cmd->add_option("--lr", f.lr, "Adam learning rate (default 0.001)");
  f.opts["leiden-runs"] = cmd->add_option("--leiden-runs", f.leiden_runs, "Global Leiden repeats (default 30)");
  f.opts["refine-runs"] = cmd->add_option("--refine-runs", f.refine_runs, "Leiden repeats per label (default 10)");
  f.opts["threshold-rule"] = cmd->add_option("--threshold-rule", f.threshold_rule,
                                             "Merge stop rule: half or all components (default half)")
                                 ->check(CLI::IsMember({"half", "all"}));
  f.opts["birch-threshold"] = cmd->add_option("--birch-threshold", f.birch_threshold,
                                              "BIRCH subcluster radius threshold (default 0.15)");
  f.opts["birch-branching"] = cmd->add_option("--birch-branching", f.birch_branching,
                                              "BIRCH branching factor (default 50)");
  f.opts["layers"] = cmd->add_option("--layers", f.layers, "GCN layer widths (default 256,128,64)")->delimiter(',');
  f.opts["parallel-runs"] = cmd->add_option("--parallel-runs", f.parallel,
                                            "Threads for independent Leiden repeats (default 1)");
  if (with_mode) {
    f.opts["mode"] = cmd->add_option("--mode", f.mode, "full, modified-split, lm-only, lr-only or unrefined-labels")
                         ->check(CLI::IsMember({"full", "modified-split", "lm-only", "lr-only", "unrefined-labels"}));
  }
}

bool given(const RunFlags& f, const std::string& name) {
  auto it = f.opts.find(name);
  return it != f.opts.end() && it->second->count() > 0;
}

RunConfig resolve(const RunFlags& f) {
  RunConfig cfg;
  if (given(f, "config")) {
    require_file("--config", f.config);
    std::ifstream in(f.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(fmt::format("--config: '{}' is not valid JSON: {}", f.config, e.what()));
    }
    // Written config.json files carry provenance next to the run settings.
    if (j.is_object()) {
      j.erase("resolved_seeds");
      j.erase("data");
    }
    cfg = run_config_from_json(j, cfg);
  }
  if (given(f, "network")) cfg.mu = *mu_preset(f.network);
  if (given(f, "mu")) cfg.mu = f.mu;
  if (given(f, "epochs")) cfg.epochs = f.epochs;
  if (given(f, "seed")) cfg.seed = f.seed;
  if (given(f, "lr")) cfg.learning_rate = f.lr;
  if (given(f, "leiden-runs")) cfg.leiden_global_runs = f.leiden_runs;
  if (given(f, "refine-runs")) cfg.refine.leiden_runs = f.refine_runs;
  if (given(f, "threshold-rule"))
    cfg.refine.threshold_rule = f.threshold_rule == "all" ? ThresholdRule::AllComponents : ThresholdRule::HalfComponents;
  if (given(f, "birch-threshold")) cfg.birch.threshold_radius = f.birch_threshold;
  if (given(f, "birch-branching")) cfg.birch.branching_factor = f.birch_branching;
  if (given(f, "layers")) cfg.layers = f.layers;
  if (given(f, "parallel-runs")) cfg.threads = f.parallel;
  if (given(f, "mode")) cfg.mode = *parse_mode(f.mode);
  validate(cfg);
  return cfg;
}

std::string default_out_dir() {
  const char* env = std::getenv("TASCOM_OUT_DIR");
  return env && *env ? env : "tascom-out";
}

std::string pct(const std::optional<double>& v) { return v ? fmt::format("{:.1f}", 100.0 * *v) : "-"; }

void print_header(std::ostream& out) {
  out << fmt::format("{:<18}{:>8}{:>8}{:>8}{:>8}{:>8}{:>13}\n", "run", "Q", "NMI", "Con", "F1", "O_c", "communities");
}

void print_row(std::ostream& out, const std::string& name, const MetricReport& r) {
  out << fmt::format("{:<18}{:>8}{:>8}{:>8}{:>8}{:>8.2f}{:>13}\n", name, pct(r.modularity), pct(r.nmi),
                     pct(r.conductance), pct(r.f1), r.connectivity, r.num_communities);
}

nlohmann::json bundle_summary(const DatasetBundle& b) {
  return {{"n", b.graph.num_nodes()},
          {"m", b.graph.num_edges()},
          {"T", b.attributes.cols()},
          {"k", b.labels ? nlohmann::json(b.labels->num_communities()) : nlohmann::json(nullptr)},
          {"attributes_from_adjacency", b.attributes_from_adjacency}};
}

int cmd_detect(const DataFlags& data, const RunFlags& flags, const std::string& out_dir, bool json,
               std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve(flags);
  const auto bundle = load(data);
  const auto result = run(bundle, cfg);
  auto config = to_json(cfg);
  config["resolved_seeds"] = {{"global_leiden", result.resolved_seeds},
                              {"refine", derive_seed(cfg.seed, {seed_stream::kRefine})},
                              {"gcn_init", derive_seed(cfg.seed, {seed_stream::kGcnInit})}};
  config["data"] = {{"edges", data.edges}, {"attrs", data.attrs}, {"labels", data.labels}};
  write_results(bundle, result.communities, metrics_json(result), config, out_dir, timings_json(result));
  if (json) {
    out << to_json(result.metrics).dump(2) << '\n';
  } else {
    print_header(out);
    print_row(out, to_string(cfg.mode), result.metrics);
  }
  err << "results written to " << out_dir << '\n';
  return kExitOk;
}

int cmd_ablate(const DataFlags& data, const RunFlags& flags, const std::string& mode, bool json, std::ostream& out) {
  RunConfig cfg = resolve(flags);
  const auto bundle = load(data);
  std::vector<RunMode> modes = {RunMode::Full};
  if (mode == "all") {
    modes.insert(modes.end(), {RunMode::LmOnly, RunMode::LrOnly, RunMode::UnrefinedLabels});
  } else {
    modes.push_back(*parse_mode(mode));
  }
  nlohmann::json j = nlohmann::json::object();
  if (!json) print_header(out);
  for (auto m : modes) {
    cfg.mode = m;
    const auto r = run(bundle, cfg);
    if (json) j[to_string(m)] = to_json(r.metrics);
    else print_row(out, to_string(m), r.metrics);
  }
  if (json) out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_leiden(const DataFlags& data, int runs, std::uint64_t seed, unsigned threads, const std::string& out_dir,
               bool json, std::ostream& out) {
  if (runs < 1) throw PreconditionError("--runs must be >= 1");
  const auto bundle = load(data);
  const Graph& g = bundle.graph;
  const auto seeds = run_seeds(seed, seed_stream::kGlobalLeiden, static_cast<std::size_t>(runs));
  PartitionScore score = bundle.labels ? PartitionScore([&](const Partition& p) { return nmi(p, *bundle.labels); })
                                       : PartitionScore([&](const Partition& p) { return modularity(g, p); });
  const auto best = best_of_runs(g, seeds, score, {}, threads);
  const auto report = metric_report(g, bundle.labels, best.partition);
  if (!out_dir.empty()) {
    nlohmann::json config = {{"runs", runs}, {"seed", seed}, {"seeds", seeds}, {"best_run", best.run}};
    write_results(bundle, best.partition, to_json(report), config, out_dir);
  }
  if (json) {
    auto j = to_json(report);
    j["best_run"] = best.run;
    j["scores"] = best.scores;
    j["score"] = bundle.labels ? "NMI" : "Q";
    out << j.dump(2) << '\n';
  } else {
    print_header(out);
    print_row(out, fmt::format("leiden[{}]", best.run), report);
  }
  return kExitOk;
}

int cmd_refine(const DataFlags& data, int runs, const std::string& rule, std::uint64_t seed, unsigned threads,
               const std::string& out_dir, bool json, std::ostream& out) {
  RefineConfig rc;
  rc.leiden_runs = runs;
  rc.threshold_rule = rule == "all" ? ThresholdRule::AllComponents : ThresholdRule::HalfComponents;
  rc.seed = derive_seed(seed, {seed_stream::kRefine});
  rc.threads = threads;
  const auto bundle = load(data);
  const Graph& g = bundle.graph;
  const auto result = refine_labels_detailed(g, *bundle.labels, rc);
  const auto before = metric_report(g, bundle.labels, *bundle.labels);
  const auto after = metric_report(g, bundle.labels, result.refined);
  if (!out_dir.empty()) {
    nlohmann::json config = {{"runs", runs}, {"threshold_rule", rule}, {"seed", seed}};
    write_results(bundle, result.refined, to_json(after), config, out_dir);
  }
  if (json) {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& s : result.labels)
      labels.push_back({{"nodes", s.nodes},
                        {"components", s.components},
                        {"after_leiden", s.after_leiden},
                        {"after_merge", s.after_merge}});
    out << nlohmann::json{{"labels", to_json(before)}, {"refined", to_json(after)}, {"per_label", labels}}.dump(2)
        << '\n';
    return kExitOk;
  }
  out << fmt::format("{:<8}{:>8}{:>12}{:>14}{:>13}\n", "label", "nodes", "components", "after_leiden",
                     "after_merge");
  for (std::size_t l = 0; l < result.labels.size(); ++l) {
    const auto& s = result.labels[l];
    out << fmt::format("{:<8}{:>8}{:>12}{:>14}{:>13}\n", l, s.nodes, s.components, s.after_leiden, s.after_merge);
  }
  out << '\n';
  print_header(out);
  print_row(out, "labels", before);
  print_row(out, "refined", after);
  return kExitOk;
}

int cmd_metrics(const DataFlags& data, const std::string& partition, bool json, std::ostream& out) {
  const auto bundle = load(data);
  require_file("--partition", partition);
  const auto cs = load_partition(partition, bundle.ids);
  const auto report = metric_report(bundle.graph, bundle.labels, cs);
  if (json) {
    out << to_json(report).dump(2) << '\n';
  } else {
    print_header(out);
    print_row(out, "partition", report);
  }
  return kExitOk;
}

int cmd_gen(const SyntheticSpec& spec, const std::string& out_dir, bool json, std::ostream& out) {
  const auto bundle = generate_synthetic(spec);
  write_dataset(bundle, out_dir);
  const auto summary = bundle_summary(bundle);
  if (json) {
    out << summary.dump(2) << '\n';
  } else {
    out << fmt::format("n={} m={} T={} k={}\n", bundle.graph.num_nodes(), bundle.graph.num_edges(),
                       bundle.attributes.cols(), bundle.labels->num_communities());
  }
  return kExitOk;
}

void route_logging_to_stderr() {
  static bool done = false;
  if (done) return;
  done = true;
  auto logger = spdlog::stderr_color_mt("tascom");
  spdlog::set_default_logger(logger);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  route_logging_to_stderr();

  CLI::App app{"Community detection on attributed networks"};
  app.name("tascom");
  app.require_subcommand(1);
  bool json = false;
  app.add_flag("--json", json, "Machine-readable JSON output instead of tables");

  DataFlags detect_data, ablate_data, leiden_data, refine_data, metrics_data;
  RunFlags detect_flags, ablate_flags;
  std::string detect_out = default_out_dir();
  std::string ablate_mode = "all";
  std::string leiden_out, refine_out;
  int leiden_runs = 30, refine_runs = 10;
  std::uint64_t leiden_seed = 0, refine_seed = 0;
  unsigned leiden_threads = 1, refine_threads = 1;
  std::string refine_rule = "half";
  std::string partition_path;
  SyntheticSpec spec;
  std::string gen_out = default_out_dir();

  auto* detect = app.add_subcommand("detect", "Run the full pipeline and write results");
  add_data_flags(detect, detect_data, false);
  add_run_flags(detect, detect_flags, true);
  detect->add_option("--out", detect_out, "Output directory (default $TASCOM_OUT_DIR or ./tascom-out)");

  auto* leiden_cmd = app.add_subcommand("leiden", "Best-of-N Leiden on the whole network");
  add_data_flags(leiden_cmd, leiden_data, false);
  leiden_cmd->add_option("--runs", leiden_runs, "Leiden repeats (default 30)");
  leiden_cmd->add_option("--seed", leiden_seed, "Master seed (default 0)");
  leiden_cmd->add_option("--parallel-runs", leiden_threads, "Threads for the repeats (default 1)");
  leiden_cmd->add_option("--out", leiden_out, "Write assignment and metrics to this directory");

  auto* refine_cmd = app.add_subcommand("refine", "Split human labels into connected sub-communities");
  add_data_flags(refine_cmd, refine_data, true);
  refine_cmd->add_option("--runs", refine_runs, "Leiden repeats per label (default 10)");
  refine_cmd->add_option("--threshold-rule", refine_rule, "Merge stop rule: half or all (default half)")
      ->check(CLI::IsMember({"half", "all"}));
  refine_cmd->add_option("--seed", refine_seed, "Master seed (default 0)");
  refine_cmd->add_option("--parallel-runs", refine_threads, "Threads for the per-label repeats (default 1)");
  refine_cmd->add_option("--out", refine_out, "Write assignment and metrics to this directory");

  auto* metrics_cmd = app.add_subcommand("metrics", "Evaluate a partition file");
  add_data_flags(metrics_cmd, metrics_data, false);
  metrics_cmd->add_option("--partition", partition_path, "Partition file, one 'id community' pair per line")
      ->required();

  auto* gen = app.add_subcommand("gen", "Generate a planted-partition attributed network");
  gen->add_option("--n", spec.n, "Nodes (default 300)");
  gen->add_option("--k", spec.k, "Labels (default 6)");
  gen->add_option("--p-in", spec.p_in, "Edge probability inside a block (default 0.3)");
  gen->add_option("--p-out", spec.p_out, "Edge probability between labels (default 0.01)");
  gen->add_option("--attributes", spec.attributes, "Attribute columns, 0 for none (default 48)");
  gen->add_option("--signal", spec.signal, "Attribute signal strength in [0, 1] (default 0.8)");
  gen->add_option("--disconnected", spec.disconnected_fraction,
                  "Fraction of labels built from two unconnected blocks (default 0)");
  gen->add_option("--seed", spec.seed, "Seed (default 0)");
  gen->add_option("--out", gen_out, "Output directory (default $TASCOM_OUT_DIR or ./tascom-out)");

  auto* ablate = app.add_subcommand("ablate", "Compare the full pipeline with loss ablations");
  add_data_flags(ablate, ablate_data, true);
  add_run_flags(ablate, ablate_flags, false);
  ablate->add_option("--mode", ablate_mode, "lm-only, lr-only, unrefined-labels or all (default all)")
      ->check(CLI::IsMember({"lm-only", "lr-only", "unrefined-labels", "all"}));

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*detect) return cmd_detect(detect_data, detect_flags, detect_out, json, out, err);
    if (*leiden_cmd) return cmd_leiden(leiden_data, leiden_runs, leiden_seed, leiden_threads, leiden_out, json, out);
    if (*refine_cmd)
      return cmd_refine(refine_data, refine_runs, refine_rule, refine_seed, refine_threads, refine_out, json, out);
    if (*metrics_cmd) return cmd_metrics(metrics_data, partition_path, json, out);
    if (*gen) return cmd_gen(spec, gen_out, json, out);
    if (*ablate) return cmd_ablate(ablate_data, ablate_flags, ablate_mode, json, out);
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace tascom
