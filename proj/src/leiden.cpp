#include "tascom/leiden.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "tascom/error.hpp"
#include "tascom/seed.hpp"

namespace tascom {
namespace {

using Rng = std::mt19937_64;

// Integer-weighted graph used at every aggregation level. Self-loops are not
// stored: they never change a move gain, only the node strength.
struct WeightedGraph {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> targets;
  std::vector<std::int64_t> weights;
  std::vector<std::int64_t> strength;
  std::int64_t two_m = 0;

  std::size_t size() const { return strength.size(); }
};

WeightedGraph from_graph(const Graph& g) {
  WeightedGraph w;
  const std::size_t n = g.num_nodes();
  w.offsets.resize(n + 1, 0);
  w.strength.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    w.offsets[v + 1] = w.offsets[v] + g.degree(v);
    w.strength[v] = static_cast<std::int64_t>(g.degree(v));
    for (NodeId u : g.neighbors(v)) {
      w.targets.push_back(u);
      w.weights.push_back(1);
    }
  }
  w.two_m = 2 * static_cast<std::int64_t>(g.num_edges());
  return w;
}

// Relabels ids densely in order of first appearance; returns the count.
std::size_t compact(std::vector<std::size_t>& ids) {
  std::vector<std::size_t> remap(ids.size(), kNoNode);
  std::size_t next = 0;
  for (auto& c : ids) {
    if (remap[c] == kNoNode) remap[c] = next++;
    c = remap[c];
  }
  return next;
}

WeightedGraph aggregate(const WeightedGraph& g, const std::vector<std::size_t>& cluster, std::size_t k) {
  WeightedGraph out;
  out.two_m = g.two_m;
  out.strength.assign(k, 0);
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t v = 0; v < g.size(); ++v) {
    members[cluster[v]].push_back(v);
    out.strength[cluster[v]] += g.strength[v];
  }
  out.offsets.assign(k + 1, 0);
  std::vector<std::int64_t> acc(k, 0);
  std::vector<std::size_t> touched;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t v : members[c]) {
      for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
        const std::size_t d = cluster[g.targets[e]];
        if (d == c) continue;
        if (acc[d] == 0) touched.push_back(d);
        acc[d] += g.weights[e];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::size_t d : touched) {
      out.targets.push_back(d);
      out.weights.push_back(acc[d]);
      acc[d] = 0;
    }
    touched.clear();
    out.offsets[c + 1] = out.targets.size();
  }
  return out;
}

// Accumulates edge weight from one node to each neighboring cluster.
class NeighborWeights {
 public:
  explicit NeighborWeights(std::size_t n) : weight_(n, 0) {}

  template <typename ClusterOf>
  void collect(const WeightedGraph& g, std::size_t v, ClusterOf&& cluster_of) {
    for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
      auto c = cluster_of(g.targets[e]);
      if (c == kNoNode) continue;
      if (weight_[c] == 0) clusters_.push_back(c);
      weight_[c] += g.weights[e];
    }
  }
  std::int64_t operator[](std::size_t c) const { return weight_[c]; }
  const std::vector<std::size_t>& clusters() const { return clusters_; }
  void clear() {
    for (auto c : clusters_) weight_[c] = 0;
    clusters_.clear();
  }

 private:
  std::vector<std::int64_t> weight_;
  std::vector<std::size_t> clusters_;
};

// Fast local moving with a FIFO queue. Gains are compared exactly in integer
// form: 2m * w(v, C) - k_v * K_C.
bool move_nodes_fast(const WeightedGraph& g, std::vector<std::size_t>& community, Rng& rng) {
  const std::size_t n = g.size();
  std::vector<std::int64_t> total(n, 0);
  for (std::size_t v = 0; v < n; ++v) total[community[v]] += g.strength[v];
  std::vector<std::size_t> members(n, 0);
  for (std::size_t v = 0; v < n; ++v) ++members[community[v]];
  std::vector<std::size_t> empty;
  for (std::size_t c = n; c-- > 0;) {
    if (members[c] == 0) empty.push_back(c);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> queue(order.begin(), order.end());
  std::vector<char> queued(n, 1);
  std::size_t head = 0;

  NeighborWeights nw(n);
  bool moved = false;
  while (head < queue.size()) {
    const std::size_t v = queue[head++];
    queued[v] = 0;
    const std::size_t from = community[v];
    const std::int64_t kv = g.strength[v];

    nw.collect(g, v, [&](std::size_t u) { return community[u]; });
    total[from] -= kv;
    --members[from];

    std::size_t best = from;
    std::int64_t best_gain = g.two_m * nw[from] - kv * total[from];
    for (std::size_t c : nw.clusters()) {
      const std::int64_t gain = g.two_m * nw[c] - kv * total[c];
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    if (best_gain < 0 && members[from] > 0 && !empty.empty()) {
      best = empty.back();
      best_gain = 0;
    }
    nw.clear();

    if (best == from) {
      total[from] += kv;
      ++members[from];
      continue;
    }
    if (!empty.empty() && best == empty.back()) empty.pop_back();
    total[best] += kv;
    ++members[best];
    community[v] = best;
    if (members[from] == 0) empty.push_back(from);
    moved = true;

    for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
      const std::size_t u = g.targets[e];
      if (!queued[u] && community[u] != best) {
        queued[u] = 1;
        queue.push_back(u);
      }
    }
    // Keep the queue buffer from growing without bound.
    if (head > n && head * 2 > queue.size()) {
      queue.erase(queue.begin(), queue.begin() + static_cast<std::ptrdiff_t>(head));
      head = 0;
    }
  }
  return moved;
}

// Refinement: inside every community, nodes start as singletons and are merged
// into well-connected sub-clusters, choosing among non-negative gains with
// probability proportional to exp(gain / theta).
std::vector<std::size_t> refine_partition(const WeightedGraph& g, const std::vector<std::size_t>& community,
                                          double theta, Rng& rng) {
  const std::size_t n = g.size();
  const double two_m = static_cast<double>(g.two_m);

  std::vector<std::int64_t> community_total(n, 0);
  for (std::size_t v = 0; v < n; ++v) community_total[community[v]] += g.strength[v];

  std::vector<std::size_t> cluster(n);
  std::iota(cluster.begin(), cluster.end(), std::size_t{0});
  std::vector<std::int64_t> cluster_total(g.strength.begin(), g.strength.end());
  std::vector<std::size_t> cluster_size(n, 1);
  // Edge weight from each cluster to the rest of its community.
  std::vector<std::int64_t> external(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
      if (community[g.targets[e]] == community[v]) external[v] += g.weights[e];
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  NeighborWeights nw(n);
  std::vector<std::size_t> candidates;
  std::vector<double> gains;
  std::vector<double> cumulative;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t v : order) {
    if (cluster_size[cluster[v]] != 1) continue;
    const std::size_t s = community[v];
    const std::int64_t kv = g.strength[v];
    const std::int64_t ks = community_total[s];
    if (g.two_m * external[v] < kv * (ks - kv)) continue;

    nw.collect(g, v, [&](std::size_t u) { return community[u] == s ? cluster[u] : kNoNode; });
    const std::size_t own = cluster[v];
    candidates.assign(1, own);
    gains.assign(1, 0.0);
    for (std::size_t c : nw.clusters()) {
      if (c == own) continue;
      const std::int64_t kc = cluster_total[c];
      if (g.two_m * external[c] < kc * (ks - kc)) continue;
      const std::int64_t gain = g.two_m * nw[c] - kv * kc;
      if (gain < 0) continue;
      candidates.push_back(c);
      gains.push_back(static_cast<double>(gain) / two_m);
    }

    std::size_t chosen = own;
    if (candidates.size() > 1) {
      const double top = *std::max_element(gains.begin(), gains.end());
      cumulative.resize(gains.size());
      double sum = 0.0;
      for (std::size_t i = 0; i < gains.size(); ++i) {
        sum += std::exp((gains[i] - top) / theta);
        cumulative[i] = sum;
      }
      const double r = unit(rng) * sum;
      const auto pick = std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin();
      chosen = candidates[std::min<std::size_t>(static_cast<std::size_t>(pick), candidates.size() - 1)];
    }
    if (chosen != own) {
      external[chosen] += external[own] - 2 * nw[chosen];
      cluster_total[chosen] += kv;
      ++cluster_size[chosen];
      cluster_size[own] = 0;
      cluster_total[own] = 0;
      external[own] = 0;
      cluster[v] = chosen;
    }
    nw.clear();
  }
  return cluster;
}

struct IterationResult {
  std::vector<std::size_t> membership;
  bool moved_at_base = false;
};

IterationResult leiden_iteration(const WeightedGraph& base, std::vector<std::size_t> community, double theta,
                                 Rng& rng) {
  IterationResult result;
  std::vector<std::size_t> node_of(base.size());
  std::iota(node_of.begin(), node_of.end(), std::size_t{0});

  WeightedGraph level_graph;
  const WeightedGraph* g = &base;
  for (int level = 0;; ++level) {
    const bool moved = move_nodes_fast(*g, community, rng);
    if (level == 0) result.moved_at_base = moved;
    const std::size_t k = compact(community);
    if (k == g->size()) break;

    auto refined = refine_partition(*g, community, theta, rng);
    std::size_t kr = compact(refined);
    if (kr == g->size()) {
      // Refinement merged nothing; aggregate on the communities themselves.
      refined = community;
      kr = k;
    }
    std::vector<std::size_t> next_community(kr);
    for (std::size_t v = 0; v < g->size(); ++v) next_community[refined[v]] = community[v];
    for (auto& x : node_of) x = refined[x];

    level_graph = aggregate(*g, refined, kr);
    g = &level_graph;
    community = std::move(next_community);
  }

  result.membership.resize(base.size());
  for (std::size_t v = 0; v < base.size(); ++v) result.membership[v] = community[node_of[v]];
  compact(result.membership);
  return result;
}

}  // namespace

Partition leiden(const Graph& g, const LeidenConfig& cfg) {
  if (cfg.max_passes < 1) throw PreconditionError("LeidenConfig.max_passes must be >= 1");
  if (!(cfg.theta > 0.0)) throw PreconditionError("LeidenConfig.theta must be > 0");
  const std::size_t n = g.num_nodes();
  if (g.num_edges() == 0) return Partition::singletons(n);

  Rng rng(cfg.seed);
  const WeightedGraph base = from_graph(g);
  std::vector<std::size_t> membership(n);
  std::iota(membership.begin(), membership.end(), std::size_t{0});
  for (int pass = 0; pass < cfg.max_passes; ++pass) {
    auto it = leiden_iteration(base, membership, cfg.theta, rng);
    const bool unchanged = it.membership == membership;
    membership = std::move(it.membership);
    if (unchanged && !it.moved_at_base) break;
  }
  return Partition(std::move(membership));
}

std::vector<std::uint64_t> run_seeds(std::uint64_t master, std::uint64_t stream, std::size_t runs) {
  std::vector<std::uint64_t> seeds(runs);
  for (std::size_t i = 0; i < runs; ++i) seeds[i] = derive_seed(master, {stream, i});
  return seeds;
}

BestRun best_of_runs(const Graph& g, std::span<const std::uint64_t> seeds, const PartitionScore& score,
                     const LeidenConfig& base, unsigned threads) {
  if (seeds.empty()) throw PreconditionError("best_of_runs needs at least one run");
  const std::size_t runs = seeds.size();
  std::vector<Partition> partitions(runs);
  std::vector<double> scores(runs, 0.0);

  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < runs; i += stride) {
      LeidenConfig cfg = base;
      cfg.seed = seeds[i];
      partitions[i] = leiden(g, cfg);
      scores[i] = score(partitions[i]);
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(runs)));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work, t, workers);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < runs; ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return BestRun{std::move(partitions[best]), best, std::move(scores)};
}

}  // namespace tascom
