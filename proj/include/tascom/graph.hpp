#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace tascom {

using NodeId = std::size_t;
using CommunityId = std::size_t;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// Simple undirected graph in compressed sparse row form.
///
/// Neighbor lists are sorted; self-loops and duplicate edges are dropped at
/// construction and counted. Immutable once built.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges);

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const { return m_; }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
  }
  bool has_edge(NodeId u, NodeId v) const;

  // Each undirected edge once, as (u, v) with u < v, in row order.
  std::vector<std::pair<NodeId, NodeId>> edges() const;

  std::size_t dropped_self_loops() const { return dropped_self_loops_; }
  std::size_t dropped_duplicates() const { return dropped_duplicates_; }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> targets_;
  std::size_t m_ = 0;
  std::size_t dropped_self_loops_ = 0;
  std::size_t dropped_duplicates_ = 0;
};

/// Non-overlapping cover of nodes 0..n-1 by communities 0..k-1, all occupied.
class Partition {
 public:
  Partition() = default;
  // Throws PreconditionError unless ids are dense (every id < k appears).
  explicit Partition(std::vector<CommunityId> assignment);

  static Partition singletons(std::size_t n);
  static Partition single_community(std::size_t n);

  std::size_t size() const { return assignment_.size(); }
  std::size_t num_communities() const { return k_; }
  CommunityId operator[](NodeId v) const { return assignment_[v]; }
  const std::vector<CommunityId>& assignment() const { return assignment_; }

  std::vector<std::vector<NodeId>> communities() const;
  std::vector<std::size_t> community_sizes() const;

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<CommunityId> assignment_;
  std::size_t k_ = 0;
};

// Relabels arbitrary ids densely, in order of first appearance.
Partition relabel_dense(std::span<const std::size_t> labels);

/// Connected components of the subgraph induced by `nodes` (the whole graph in
/// the first overload). Entry i of the result belongs to nodes[i]; ids follow
/// first appearance in `nodes` order.
Partition connected_components(const Graph& g);
Partition connected_components(const Graph& g, std::span<const NodeId> nodes);

struct Subgraph {
  Graph graph;
  std::vector<NodeId> to_original;   // new -> old
  std::vector<NodeId> from_original; // old -> new, kNoNode when absent
};

Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes);

/// Combines per-subset partitions into one partition over all nodes.
/// `inner[s]` covers the nodes of subset s in increasing node order. Global ids
/// are assigned by (subset id, inner id).
Partition merge_partitions(const Partition& outer, std::span<const Partition> inner);

}  // namespace tascom
