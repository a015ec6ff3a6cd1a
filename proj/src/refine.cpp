#include "tascom/refine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tascom/error.hpp"
#include "tascom/metrics.hpp"
#include "tascom/seed.hpp"

namespace tascom {

MergeState::MergeState(const Graph& g, std::span<const std::vector<NodeId>> groups)
    : two_m_(2 * static_cast<std::int64_t>(g.num_edges())),
      m_(static_cast<double>(g.num_edges())),
      volume_(groups.size(), 0),
      links_(groups.size()),
      parent_(groups.size()),
      order_(groups.size()),
      alive_(groups.size()) {
  std::vector<std::size_t> group_of(g.num_nodes(), kNoNode);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    parent_[i] = i;
    order_[i] = i;
    for (NodeId v : groups[i]) {
      if (group_of[v] != kNoNode) throw PreconditionError("MergeState: groups overlap");
      group_of[v] = i;
      volume_[i] += static_cast<std::int64_t>(g.degree(v));
    }
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (NodeId v : groups[i]) {
      for (NodeId u : g.neighbors(v)) {
        const auto j = group_of[u];
        if (j != kNoNode && j != i) ++links_[i][j];
      }
    }
  }
}

std::size_t MergeState::find(std::size_t x) const {
  while (parent_[x] != x) x = parent_[x];
  return x;
}

std::size_t MergeState::index_of(std::size_t original) const {
  const auto root = find(original);
  return static_cast<std::size_t>(std::lower_bound(order_.begin(), order_.end(), root) - order_.begin());
}

std::int64_t MergeState::edges_between(std::size_t a, std::size_t b) const {
  const auto& l = links_[order_[a]];
  auto it = l.find(order_[b]);
  return it == l.end() ? 0 : it->second;
}

bool MergeState::has_edge_sharing_pair() const {
  return std::any_of(order_.begin(), order_.end(), [&](std::size_t a) { return !links_[a].empty(); });
}

std::optional<MergeState::Choice> MergeState::best(bool require_shared_edge) const {
  std::optional<std::pair<std::size_t, std::size_t>> arg;  // original ids
  std::int64_t best_gain = 0;
  auto consider = [&](std::size_t a, std::size_t b, std::int64_t e) {
    const std::int64_t gain = two_m_ * e - volume_[a] * volume_[b];
    if (!arg || gain > best_gain) {
      arg = {a, b};
      best_gain = gain;
    }
  };
  for (std::size_t ia = 0; ia < order_.size(); ++ia) {
    const std::size_t a = order_[ia];
    if (require_shared_edge) {
      for (auto it = links_[a].upper_bound(a); it != links_[a].end(); ++it) consider(a, it->first, it->second);
    } else {
      for (std::size_t ib = ia + 1; ib < order_.size(); ++ib) {
        const std::size_t b = order_[ib];
        auto it = links_[a].find(b);
        consider(a, b, it == links_[a].end() ? 0 : it->second);
      }
    }
  }
  if (!arg) return std::nullopt;
  const auto pos = [&](std::size_t x) {
    return static_cast<std::size_t>(std::lower_bound(order_.begin(), order_.end(), x) - order_.begin());
  };
  return Choice{pos(arg->first), pos(arg->second), best_gain,
                static_cast<double>(best_gain) / (static_cast<double>(two_m_) * m_)};
}

void MergeState::merge(const Choice& c) {
  if (c.first >= c.second || c.second >= order_.size()) throw PreconditionError("MergeState::merge: bad choice");
  const std::size_t a = order_[c.first];
  const std::size_t b = order_[c.second];
  for (auto [other, w] : links_[b]) {
    links_[other].erase(b);
    if (other == a) continue;
    links_[a][other] += w;
    links_[other][a] += w;
  }
  links_[a].erase(b);
  links_[b].clear();
  volume_[a] += volume_[b];
  parent_[b] = a;
  order_.erase(order_.begin() + static_cast<std::ptrdiff_t>(c.second));
  --alive_;
}

std::optional<Partition> merge_step(const Graph& g, const Partition& cs, std::span<const CommunityId> candidates,
                                    bool require_shared_edge) {
  if (cs.size() != g.num_nodes()) throw PreconditionError("merge_step: partition does not cover the graph");
  std::vector<CommunityId> ids(candidates.begin(), candidates.end());
  if (ids.empty()) {
    ids.resize(cs.num_communities());
    for (std::size_t c = 0; c < ids.size(); ++c) ids[c] = c;
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 2) return std::nullopt;

  auto all = cs.communities();
  std::vector<std::vector<NodeId>> groups;
  groups.reserve(ids.size());
  for (auto c : ids) {
    if (c >= all.size()) throw PreconditionError("merge_step: unknown community id");
    groups.push_back(std::move(all[c]));
  }
  MergeState state(g, groups);
  auto choice = state.best(require_shared_edge);
  if (!choice) return std::nullopt;

  const CommunityId keep = ids[choice->first];
  const CommunityId drop = ids[choice->second];
  std::vector<CommunityId> next(cs.assignment());
  for (auto& c : next) {
    if (c == drop) c = keep;
    else if (c > drop) --c;
  }
  return Partition(std::move(next));
}

RefineResult refine_labels_detailed(const Graph& g, const Partition& labels, const RefineConfig& cfg) {
  if (cfg.leiden_runs < 1) throw PreconditionError("RefineConfig.leiden_runs must be >= 1");
  if (labels.size() != g.num_nodes()) throw PreconditionError("refine_labels: labels do not cover the graph");

  RefineResult result;
  std::vector<Partition> split;
  std::vector<Partition> merged;
  const auto members = labels.communities();
  for (std::size_t label = 0; label < members.size(); ++label) {
    const auto sub = induced_subgraph(g, members[label]);
    LabelStats stats;
    stats.nodes = members[label].size();
    stats.components = connected_components(sub.graph).num_communities();

    Partition local = Partition::singletons(stats.nodes);
    if (sub.graph.num_edges() > 0) {
      std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg.leiden_runs));
      for (std::size_t r = 0; r < seeds.size(); ++r) seeds[r] = derive_seed(cfg.seed, {seed_stream::kRefine, label, r});
      const auto& sg = sub.graph;
      local = best_of_runs(sg, seeds, [&sg](const Partition& p) { return modularity(sg, p); }, cfg.leiden,
                           cfg.threads)
                  .partition;
    }
    stats.after_leiden = local.num_communities();
    split.push_back(local);

    std::vector<std::vector<NodeId>> groups(local.num_communities());
    for (std::size_t i = 0; i < stats.nodes; ++i) groups[local[i]].push_back(members[label][i]);
    MergeState state(g, groups);

    const double threshold = cfg.threshold_rule == ThresholdRule::HalfComponents
                                 ? static_cast<double>(stats.components) / 2.0
                                 : static_cast<double>(stats.components);
    const auto floor_count = std::max<std::size_t>(static_cast<std::size_t>(std::ceil(threshold)), 1);
    while (state.size() > floor_count) {
      auto choice = state.best(/*require_shared_edge=*/true);
      if (!choice) break;
      state.merge(*choice);
    }
    std::vector<std::size_t> inner(stats.nodes);
    for (std::size_t i = 0; i < stats.nodes; ++i) inner[i] = state.index_of(local[i]);
    merged.push_back(relabel_dense(inner));
    stats.after_merge = merged.back().num_communities();
    result.labels.push_back(stats);
  }
  result.refined = merge_partitions(labels, merged);
  result.leiden_split = merge_partitions(labels, split);
  return result;
}

Partition refine_labels(const Graph& g, const Partition& labels, const RefineConfig& cfg) {
  return refine_labels_detailed(g, labels, cfg).refined;
}

}  // namespace tascom
