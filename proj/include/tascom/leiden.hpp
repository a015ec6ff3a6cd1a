#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tascom/graph.hpp"

namespace tascom {

struct LeidenConfig {
  std::uint64_t seed = 0;
  // Upper bound on full Leiden iterations (each one runs move/refine/aggregate
  // until the aggregate graph stops shrinking).
  int max_passes = 20;
  // Randomness of the refinement merge choice; gains are measured in edge units.
  double theta = 0.01;
};

/// Leiden modularity optimization (resolution 1).
///
/// Every returned community is connected, and no single node can be moved to
/// another community (or a fresh singleton) with a modularity gain once the
/// iteration converges. Deterministic for a fixed seed.
Partition leiden(const Graph& g, const LeidenConfig& cfg);

struct BestRun {
  Partition partition;
  std::size_t run = 0;
  std::vector<double> scores;  // one per run, in seed order
};

using PartitionScore = std::function<double(const Partition&)>;

/// Runs Leiden once per seed and keeps the highest-scoring result; ties go to
/// the lowest run index. `threads` > 1 runs seeds concurrently with the same
/// outcome as the sequential order.
BestRun best_of_runs(const Graph& g, std::span<const std::uint64_t> seeds, const PartitionScore& score,
                     const LeidenConfig& base = {}, unsigned threads = 1);

// `runs` seeds derived from a master seed and a named stream.
std::vector<std::uint64_t> run_seeds(std::uint64_t master, std::uint64_t stream, std::size_t runs);

}  // namespace tascom
