#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tascom/birch.hpp"
#include "tascom/data_io.hpp"
#include "tascom/gcn.hpp"
#include "tascom/refine.hpp"

namespace tascom {

enum class RunMode {
  Full,
  LmOnly,           // mu = 0
  LrOnly,           // label term only
  UnrefinedLabels,  // human labels instead of refined labels in the label term
  ModifiedSplit,    // full run, then every isolated sub-network becomes a community
};

std::string to_string(RunMode mode);
// Accepts "full", "lm-only", "lr-only", "unrefined-labels", "modified-split".
std::optional<RunMode> parse_mode(const std::string& name);

// Label-term weights tuned per benchmark network; nullopt for unknown names.
std::optional<double> mu_preset(const std::string& network);

struct RunConfig {
  double mu = 0.5;
  int leiden_global_runs = 30;
  RefineConfig refine;
  int epochs = 300;
  double learning_rate = 0.001;
  std::vector<std::size_t> layers = GcnModel::default_layers();
  BirchConfig birch;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::Full;
  unsigned threads = 1;
};

// Throws PreconditionError on out-of-range values.
void validate(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);
// Fields missing from `j` keep their value in `base`.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

struct MetricReport {
  double modularity = 0.0;
  std::optional<double> nmi;  // absent without labels
  double conductance = 0.0;
  std::optional<double> f1;
  double connectivity = 0.0;  // O_c
  std::size_t num_communities = 0;
};

MetricReport metric_report(const Graph& g, const std::optional<Partition>& labels, const Partition& cs);
nlohmann::json to_json(const MetricReport& r);

struct RunResult {
  Partition communities;
  MetricReport metrics;
  Partition leiden_target;   // CS_L
  Partition label_target;    // CS_R (or CS_O / substitute labels, by mode)
  std::vector<double> loss_trace;
  std::map<std::string, double> timings;  // seconds per stage
  std::vector<std::uint64_t> resolved_seeds;  // global Leiden seeds
};

/// End-to-end run: modularity target, label refinement, GCN training on the
/// composite loss, BIRCH on the final embedding, metrics. Stage failures are
/// rethrown with the stage name prefixed.
RunResult run(const DatasetBundle& bundle, const RunConfig& cfg);

// metrics.json body: metric report plus the loss trace.
nlohmann::json metrics_json(const RunResult& r);
nlohmann::json timings_json(const RunResult& r);

}  // namespace tascom
