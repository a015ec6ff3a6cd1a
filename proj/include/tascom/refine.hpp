#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tascom/graph.hpp"
#include "tascom/leiden.hpp"

namespace tascom {

enum class ThresholdRule {
  HalfComponents,  // stop merging at |CC(label)| / 2 sub-communities
  AllComponents,   // stop merging at |CC(label)| sub-communities
};

struct RefineConfig {
  int leiden_runs = 10;
  ThresholdRule threshold_rule = ThresholdRule::HalfComponents;
  std::uint64_t seed = 0;
  LeidenConfig leiden;
  unsigned threads = 1;
};

struct LabelStats {
  std::size_t nodes = 0;
  std::size_t components = 0;
  std::size_t after_leiden = 0;
  std::size_t after_merge = 0;
};

struct RefineResult {
  Partition refined;       // split-and-merged labels
  Partition leiden_split;  // sub-communities before any merging
  std::vector<LabelStats> labels;
};

/// Splits every human label into connected sub-communities with repeated
/// Leiden runs on its induced sub-network (best sub-network modularity), then
/// greedily merges edge-sharing sub-communities by largest global modularity
/// gain until the threshold count is reached or no edge-sharing pair remains.
RefineResult refine_labels_detailed(const Graph& g, const Partition& labels, const RefineConfig& cfg);
Partition refine_labels(const Graph& g, const Partition& labels, const RefineConfig& cfg);

/// Greedy merge bookkeeping for a set of communities of a larger graph.
///
/// Gains are kept in exact integer form 2m * e_ij - vol_i * vol_j, which equals
/// 2m^2 times the modularity change of merging i and j.
class MergeState {
 public:
  // `groups` lists the communities taking part; `g` supplies global degrees and m.
  MergeState(const Graph& g, std::span<const std::vector<NodeId>> groups);

  std::size_t size() const { return alive_; }
  bool has_edge_sharing_pair() const;

  struct Choice {
    std::size_t first;   // index among the alive groups, first < second
    std::size_t second;
    std::int64_t gain2m2;
    double delta_q;
  };
  // Best pair by gain, ties to the lexicographically smallest (first, second).
  std::optional<Choice> best(bool require_shared_edge) const;
  // Applies a choice from best(); indices of later groups shift down by one.
  void merge(const Choice& c);

  // Current index of a group given by its position at construction.
  std::size_t index_of(std::size_t original) const;

  std::int64_t edges_between(std::size_t a, std::size_t b) const;
  std::int64_t volume(std::size_t a) const { return volume_[order_[a]]; }

 private:
  std::int64_t two_m_ = 0;
  double m_ = 0.0;
  std::vector<std::int64_t> volume_;                         // by original group id
  std::vector<std::map<std::size_t, std::int64_t>> links_;  // original id -> inter-edge counts
  std::vector<std::size_t> parent_;                          // original id -> surviving id
  std::vector<std::size_t> order_;                           // alive original ids, ascending
  std::size_t alive_ = 0;

  std::size_t find(std::size_t x) const;
};

/// One greedy merge over the full graph: merges the pair of communities in
/// `candidates` (all communities when empty) with the highest resulting
/// modularity. The merged community keeps the smaller id, the larger id is
/// removed and higher ids shift down. Returns nullopt when no eligible pair
/// exists.
std::optional<Partition> merge_step(const Graph& g, const Partition& cs,
                                    std::span<const CommunityId> candidates = {},
                                    bool require_shared_edge = false);

}  // namespace tascom
