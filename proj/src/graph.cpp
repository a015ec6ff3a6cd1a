#include "tascom/graph.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <queue>
#include <string>
#include <unordered_map>

#include "tascom/error.hpp"

namespace tascom {

Graph::Graph(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges) {
  std::vector<std::pair<NodeId, NodeId>> arcs;
  arcs.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) {
      throw PreconditionError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                              ") out of range for " + std::to_string(n) + " nodes");
    }
    if (u == v) {
      ++dropped_self_loops_;
      continue;
    }
    arcs.emplace_back(u, v);
    arcs.emplace_back(v, u);
  }
  std::sort(arcs.begin(), arcs.end());
  auto last = std::unique(arcs.begin(), arcs.end());
  dropped_duplicates_ = static_cast<std::size_t>(arcs.end() - last) / 2;
  arcs.erase(last, arcs.end());

  offsets_.assign(n + 1, 0);
  targets_.resize(arcs.size());
  for (auto [u, v] : arcs) ++offsets_[u + 1];
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  for (std::size_t i = 0; i < arcs.size(); ++i) targets_[i] = arcs[i].second;
  m_ = arcs.size() / 2;
  assert(offsets_.back() == 2 * m_);
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::pair<NodeId, NodeId>> Graph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(m_);
  for (NodeId u = 0; u < num_nodes(); ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

Partition::Partition(std::vector<CommunityId> assignment) : assignment_(std::move(assignment)) {
  std::vector<char> seen;
  for (CommunityId c : assignment_) {
    if (c >= seen.size()) seen.resize(c + 1, 0);
    seen[c] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw PreconditionError("partition community ids are not dense");
  }
  k_ = seen.size();
}

Partition relabel_dense(std::span<const std::size_t> labels) {
  std::unordered_map<std::size_t, CommunityId> ids;
  std::vector<CommunityId> assignment;
  assignment.reserve(labels.size());
  for (auto l : labels) {
    auto [it, inserted] = ids.try_emplace(l, ids.size());
    assignment.push_back(it->second);
  }
  return Partition(std::move(assignment));
}

Partition Partition::singletons(std::size_t n) {
  std::vector<CommunityId> a(n);
  std::iota(a.begin(), a.end(), CommunityId{0});
  return Partition(std::move(a));
}

Partition Partition::single_community(std::size_t n) {
  return Partition(std::vector<CommunityId>(n, 0));
}

std::vector<std::vector<NodeId>> Partition::communities() const {
  std::vector<std::vector<NodeId>> out(k_);
  for (NodeId v = 0; v < assignment_.size(); ++v) out[assignment_[v]].push_back(v);
  return out;
}

std::vector<std::size_t> Partition::community_sizes() const {
  std::vector<std::size_t> sizes(k_, 0);
  for (CommunityId c : assignment_) ++sizes[c];
  return sizes;
}

Partition connected_components(const Graph& g) {
  std::vector<NodeId> all(g.num_nodes());
  std::iota(all.begin(), all.end(), NodeId{0});
  return connected_components(g, all);
}

Partition connected_components(const Graph& g, std::span<const NodeId> nodes) {
  constexpr CommunityId kUnset = std::numeric_limits<CommunityId>::max();
  std::unordered_map<NodeId, std::size_t> local;
  local.reserve(nodes.size() * 2);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] >= g.num_nodes()) throw PreconditionError("node index out of range");
    if (!local.emplace(nodes[i], i).second) throw PreconditionError("duplicate node in subset");
  }

  std::vector<CommunityId> comp(nodes.size(), kUnset);
  CommunityId next = 0;
  std::queue<std::size_t> frontier;
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    if (comp[s] != kUnset) continue;
    comp[s] = next;
    frontier.push(s);
    while (!frontier.empty()) {
      std::size_t i = frontier.front();
      frontier.pop();
      for (NodeId w : g.neighbors(nodes[i])) {
        auto it = local.find(w);
        if (it == local.end() || comp[it->second] != kUnset) continue;
        comp[it->second] = next;
        frontier.push(it->second);
      }
    }
    ++next;
  }
  return Partition(std::move(comp));
}

Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes) {
  Subgraph sub;
  sub.from_original.assign(g.num_nodes(), kNoNode);
  sub.to_original.assign(nodes.begin(), nodes.end());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] >= g.num_nodes()) throw PreconditionError("node index out of range");
    if (sub.from_original[nodes[i]] != kNoNode) throw PreconditionError("duplicate node in subset");
    sub.from_original[nodes[i]] = i;
  }
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (NodeId w : g.neighbors(nodes[i])) {
      NodeId j = sub.from_original[w];
      if (j != kNoNode && i < j) edges.emplace_back(i, j);
    }
  }
  sub.graph = Graph(nodes.size(), edges);
  return sub;
}

Partition merge_partitions(const Partition& outer, std::span<const Partition> inner) {
  if (inner.size() != outer.num_communities()) {
    throw PreconditionError("merge_partitions: expected " + std::to_string(outer.num_communities()) +
                            " inner partitions, got " + std::to_string(inner.size()));
  }
  auto sizes = outer.community_sizes();
  std::vector<CommunityId> base(inner.size() + 1, 0);
  for (std::size_t s = 0; s < inner.size(); ++s) {
    if (inner[s].size() != sizes[s]) {
      throw PreconditionError("merge_partitions: inner partition " + std::to_string(s) + " covers " +
                              std::to_string(inner[s].size()) + " nodes but subset has " +
                              std::to_string(sizes[s]));
    }
    base[s + 1] = base[s] + inner[s].num_communities();
  }
  std::vector<std::size_t> cursor(inner.size(), 0);
  std::vector<CommunityId> merged(outer.size());
  for (NodeId v = 0; v < outer.size(); ++v) {
    auto s = outer[v];
    merged[v] = base[s] + inner[s][cursor[s]++];
  }
  return Partition(std::move(merged));
}

}  // namespace tascom
