#include "tascom/pipeline.hpp"

#include <cassert>
#include <chrono>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tascom/error.hpp"
#include "tascom/leiden.hpp"
#include "tascom/loss.hpp"
#include "tascom/metrics.hpp"
#include "tascom/seed.hpp"

namespace tascom {

namespace {

constexpr std::pair<RunMode, const char*> kModes[] = {
    {RunMode::Full, "full"},
    {RunMode::LmOnly, "lm-only"},
    {RunMode::LrOnly, "lr-only"},
    {RunMode::UnrefinedLabels, "unrefined-labels"},
    {RunMode::ModifiedSplit, "modified-split"},
};

const char* rule_name(ThresholdRule r) { return r == ThresholdRule::HalfComponents ? "half" : "all"; }

ThresholdRule parse_rule(const std::string& s) {
  if (s == "half") return ThresholdRule::HalfComponents;
  if (s == "all") return ThresholdRule::AllComponents;
  throw PreconditionError(fmt::format("unknown threshold rule '{}' (expected half or all)", s));
}

// Runs `f`, records its wall time under `stage`, and prefixes failures with it.
template <typename F>
auto timed(std::map<std::string, double>& timings, const std::string& stage, F&& f) {
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    timings[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  try {
    auto out = f();
    record();
    return out;
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", stage, e.what()));
  } catch (const PreconditionError& e) {
    throw PreconditionError(fmt::format("{}: {}", stage, e.what()));
  } catch (const RuntimeFailure& e) {
    throw RuntimeFailure(fmt::format("{}: {}", stage, e.what()));
  }
}

}  // namespace

std::string to_string(RunMode mode) {
  for (auto [m, name] : kModes)
    if (m == mode) return name;
  return "full";
}

std::optional<RunMode> parse_mode(const std::string& name) {
  for (auto [m, n] : kModes)
    if (name == n) return m;
  return std::nullopt;
}

std::optional<double> mu_preset(const std::string& network) {
  static const std::map<std::string, double> presets = {
      {"cora", 0.5}, {"citeseer", 0.2}, {"amazon-photo", 0.2},
      {"amazon-pc", 0.5}, {"coauthor-cs", 10.0}, {"coauthor-phy", 0.5},
  };
  auto it = presets.find(network);
  if (it == presets.end()) return std::nullopt;
  return it->second;
}

void validate(const RunConfig& c) {
  auto fail = [](const std::string& msg) { throw PreconditionError("run config: " + msg); };
  if (!(c.mu >= 0.0) || !std::isfinite(c.mu)) fail("mu must be a finite value >= 0");
  if (c.leiden_global_runs < 1) fail("leiden_global_runs must be >= 1");
  if (c.refine.leiden_runs < 1) fail("refine leiden_runs must be >= 1");
  if (c.epochs < 0) fail("epochs must be >= 0");
  if (!(c.learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (c.layers.empty()) fail("at least one GCN layer is required");
  for (auto d : c.layers)
    if (d == 0) fail("layer widths must be positive");
  if (!(c.birch.threshold_radius > 0.0)) fail("birch threshold must be > 0");
  if (c.birch.branching_factor < 2) fail("birch branching factor must be >= 2");
  if (c.threads < 1) fail("threads must be >= 1");
}

nlohmann::json to_json(const RunConfig& c) {
  return {
      {"mu", c.mu},
      {"leiden_global_runs", c.leiden_global_runs},
      {"refine_leiden_runs", c.refine.leiden_runs},
      {"threshold_rule", rule_name(c.refine.threshold_rule)},
      {"leiden_max_passes", c.refine.leiden.max_passes},
      {"leiden_theta", c.refine.leiden.theta},
      {"epochs", c.epochs},
      {"learning_rate", c.learning_rate},
      {"layers", c.layers},
      {"birch_threshold", c.birch.threshold_radius},
      {"birch_branching_factor", c.birch.branching_factor},
      {"seed", c.seed},
      {"mode", to_string(c.mode)},
      {"threads", c.threads},
  };
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw PreconditionError("run config JSON must be an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "mu") c.mu = v.get<double>();
      else if (key == "leiden_global_runs") c.leiden_global_runs = v.get<int>();
      else if (key == "refine_leiden_runs") c.refine.leiden_runs = v.get<int>();
      else if (key == "threshold_rule") c.refine.threshold_rule = parse_rule(v.get<std::string>());
      else if (key == "leiden_max_passes") c.refine.leiden.max_passes = v.get<int>();
      else if (key == "leiden_theta") c.refine.leiden.theta = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "layers") c.layers = v.get<std::vector<std::size_t>>();
      else if (key == "birch_threshold") c.birch.threshold_radius = v.get<double>();
      else if (key == "birch_branching_factor") c.birch.branching_factor = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "threads") c.threads = v.get<unsigned>();
      else if (key == "mode") {
        auto m = parse_mode(v.get<std::string>());
        if (!m) throw PreconditionError(fmt::format("unknown mode '{}'", v.get<std::string>()));
        c.mode = *m;
      } else {
        throw PreconditionError(fmt::format("unknown run config key '{}'", key));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(fmt::format("run config JSON: {}", e.what()));
  }
  return c;
}

MetricReport metric_report(const Graph& g, const std::optional<Partition>& labels, const Partition& cs) {
  MetricReport r;
  r.modularity = modularity(g, cs);
  r.conductance = conductance(g, cs).mean;
  r.connectivity = connectivity_score(g, cs);
  r.num_communities = cs.num_communities();
  if (labels) {
    r.nmi = nmi(cs, *labels);
    r.f1 = f1_score(cs, *labels);
  }
  return r;
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j;
  j["Q"] = r.modularity;
  j["NMI"] = r.nmi ? nlohmann::json(*r.nmi) : nlohmann::json(nullptr);
  j["Con"] = r.conductance;
  j["F1"] = r.f1 ? nlohmann::json(*r.f1) : nlohmann::json(nullptr);
  j["O_c"] = r.connectivity;
  j["num_communities"] = r.num_communities;
  return j;
}

RunResult run(const DatasetBundle& bundle, const RunConfig& cfg) {
  validate(bundle);
  validate(cfg);
  const Graph& g = bundle.graph;
  RunResult out;

  // Modularity target: best global Leiden run, scored against the human
  // labels when they exist and by modularity otherwise.
  out.resolved_seeds = run_seeds(cfg.seed, seed_stream::kGlobalLeiden, static_cast<std::size_t>(cfg.leiden_global_runs));
  out.leiden_target = timed(out.timings, "leiden", [&] {
    PartitionScore score = bundle.labels ? PartitionScore([&](const Partition& p) { return nmi(p, *bundle.labels); })
                                         : PartitionScore([&](const Partition& p) { return modularity(g, p); });
    return best_of_runs(g, out.resolved_seeds, score, cfg.refine.leiden, cfg.threads).partition;
  });

  // Without human labels an independent Leiden partition stands in for them.
  const Partition human = bundle.labels ? *bundle.labels : timed(out.timings, "substitute-labels", [&] {
    LeidenConfig lc = cfg.refine.leiden;
    lc.seed = derive_seed(cfg.seed, {seed_stream::kSubstituteLabels});
    return leiden(g, lc);
  });

  out.label_target = timed(out.timings, "refine", [&] {
    if (cfg.mode == RunMode::UnrefinedLabels) return human;
    RefineConfig rc = cfg.refine;
    rc.seed = derive_seed(cfg.seed, {seed_stream::kRefine});
    rc.threads = cfg.threads;
    return refine_labels(g, human, rc);
  });
#ifndef NDEBUG
  if (cfg.mode != RunMode::UnrefinedLabels) {
    for (const auto& members : out.label_target.communities())
      assert(connected_components(g, members).num_communities() == 1);
  }
#endif

  GcnModel model(g, static_cast<std::size_t>(bundle.attributes.cols()), cfg.layers,
                 derive_seed(cfg.seed, {seed_stream::kGcnInit}));
  const Matrix embedding = timed(out.timings, "train", [&] {
    const PairwiseTarget hl(out.leiden_target);
    const PairwiseTarget hr(out.label_target);
    LossProvider loss;
    if (cfg.mode == RunMode::LrOnly) {
      loss = [&](const Matrix& x) { return pairwise_loss(hr, x); };
    } else {
      const LossConfig lc{cfg.mode == RunMode::LmOnly ? 0.0 : cfg.mu};
      loss = [&, lc](const Matrix& x) { return total_loss(hl, hr, x, lc); };
    }
    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.adam.learning_rate = cfg.learning_rate;
    out.loss_trace = train(model, bundle.attributes, loss, tc).loss_trace;
    return embed(model, bundle.attributes);
  });

  out.communities = timed(out.timings, "birch", [&] { return birch_cluster(embedding, cfg.birch); });
  if (cfg.mode == RunMode::ModifiedSplit) out.communities = split_disconnected(g, out.communities);

  out.metrics = timed(out.timings, "metrics", [&] { return metric_report(g, bundle.labels, out.communities); });
  spdlog::debug("run finished: {} communities, Q={:.4f}", out.metrics.num_communities, out.metrics.modularity);
  return out;
}

nlohmann::json metrics_json(const RunResult& r) {
  auto j = to_json(r.metrics);
  j["loss_trace"] = r.loss_trace;
  return j;
}

nlohmann::json timings_json(const RunResult& r) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [stage, secs] : r.timings) j[stage] = secs;
  return j;
}

}  // namespace tascom
