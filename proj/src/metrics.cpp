#include "tascom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "tascom/error.hpp"

namespace tascom {
namespace {

void require_cover(const Graph& g, const Partition& cs, const char* what) {
  if (cs.size() != g.num_nodes()) {
    throw PreconditionError(std::string(what) + ": partition covers " + std::to_string(cs.size()) +
                            " nodes, graph has " + std::to_string(g.num_nodes()));
  }
}

double pairs(std::uint64_t x) { return x < 2 ? 0.0 : 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); }

}  // namespace

ConfusionMatrix confusion_matrix(const Partition& c, const Partition& d) {
  if (c.size() != d.size()) throw PreconditionError("partitions cover different node counts");
  ConfusionMatrix p;
  p.rows = c.num_communities();
  p.cols = d.num_communities();
  p.counts.assign(p.rows * p.cols, 0);
  p.row_sums.assign(p.rows, 0);
  p.col_sums.assign(p.cols, 0);
  for (NodeId v = 0; v < c.size(); ++v) {
    ++p.counts[c[v] * p.cols + d[v]];
    ++p.row_sums[c[v]];
    ++p.col_sums[d[v]];
  }
  p.total = c.size();
  return p;
}

double modularity(const Graph& g, const Partition& cs) {
  require_cover(g, cs, "modularity");
  const double m = static_cast<double>(g.num_edges());
  if (g.num_edges() == 0) {
    spdlog::warn("modularity of an edgeless graph is defined as 0");
    return 0.0;
  }
  std::vector<std::uint64_t> intra(cs.num_communities(), 0);
  std::vector<std::uint64_t> volume(cs.num_communities(), 0);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    volume[cs[u]] += g.degree(u);
    for (NodeId v : g.neighbors(u)) {
      if (u < v && cs[u] == cs[v]) ++intra[cs[u]];
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < intra.size(); ++c) {
    const double share = static_cast<double>(volume[c]) / (2.0 * m);
    q += static_cast<double>(intra[c]) / m - share * share;
  }
  return q;
}

double nmi(const Partition& c, const Partition& d) {
  if (c.size() == 0) throw PreconditionError("nmi of empty partitions");
  const auto p = confusion_matrix(c, d);
  const double n = static_cast<double>(p.total);

  double mutual = 0.0;
  for (std::size_t i = 0; i < p.rows; ++i) {
    for (std::size_t j = 0; j < p.cols; ++j) {
      const auto pij = p.at(i, j);
      if (pij == 0) continue;
      const double x = static_cast<double>(pij);
      mutual += x * std::log(x * n / (static_cast<double>(p.row_sums[i]) * static_cast<double>(p.col_sums[j])));
    }
  }
  double denom = 0.0;
  for (auto r : p.row_sums) denom += static_cast<double>(r) * std::log(static_cast<double>(r) / n);
  for (auto s : p.col_sums) denom += static_cast<double>(s) * std::log(static_cast<double>(s) / n);

  if (denom == 0.0) {
    // Both partitions are a single community, hence identical.
    return 1.0;
  }
  // Same clustering up to relabeling: every occupied cell fills its row and column.
  if (p.rows == p.cols) {
    bool bijective = true;
    for (std::size_t i = 0; i < p.rows && bijective; ++i)
      for (std::size_t j = 0; j < p.cols && bijective; ++j)
        if (p.at(i, j) != 0 && (p.at(i, j) != p.row_sums[i] || p.at(i, j) != p.col_sums[j])) bijective = false;
    if (bijective) return 1.0;
  }
  const double value = -2.0 * mutual / denom;
  return std::clamp(value, 0.0, 1.0);
}

ConductanceResult conductance(const Graph& g, const Partition& cs) {
  require_cover(g, cs, "conductance");
  const std::size_t k = cs.num_communities();
  std::vector<std::uint64_t> cut(k, 0);
  std::vector<std::uint64_t> volume(k, 0);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    volume[cs[u]] += g.degree(u);
    for (NodeId v : g.neighbors(u)) {
      if (cs[u] != cs[v]) ++cut[cs[u]];
    }
  }
  const std::uint64_t total_volume = 2 * g.num_edges();

  ConductanceResult result;
  result.per_community.resize(k, 0.0);
  std::size_t degenerate = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const auto denom = std::min(volume[c], total_volume - volume[c]);
    if (denom == 0) {
      ++degenerate;
      continue;
    }
    result.per_community[c] = static_cast<double>(cut[c]) / static_cast<double>(denom);
  }
  if (degenerate > 0) {
    spdlog::warn("conductance: {} communit{} with zero volume on one side, phi set to 0", degenerate,
                 degenerate == 1 ? "y" : "ies");
  }
  double sum = 0.0;
  for (double phi : result.per_community) sum += phi;
  result.mean = k > 0 ? sum / static_cast<double>(k) : 0.0;
  return result;
}

double f1_score(const Partition& predicted, const Partition& truth) {
  const auto p = confusion_matrix(predicted, truth);
  double together = 0.0;
  for (auto x : p.counts) together += pairs(x);
  double predicted_pairs = 0.0;
  for (auto x : p.row_sums) predicted_pairs += pairs(x);
  double true_pairs = 0.0;
  for (auto x : p.col_sums) true_pairs += pairs(x);
  if (predicted_pairs == 0.0 || true_pairs == 0.0) return 0.0;
  const double precision = together / predicted_pairs;
  const double recall = together / true_pairs;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double connectivity_score(const Graph& g, const Partition& cs) {
  require_cover(g, cs, "connectivity_score");
  if (cs.num_communities() == 0) return 0.0;
  std::size_t components = 0;
  for (const auto& members : cs.communities()) {
    components += connected_components(g, members).num_communities();
  }
  return static_cast<double>(components) / static_cast<double>(cs.num_communities());
}

Partition split_disconnected(const Graph& g, const Partition& cs) {
  require_cover(g, cs, "split_disconnected");
  std::vector<Partition> inner;
  inner.reserve(cs.num_communities());
  for (const auto& members : cs.communities()) inner.push_back(connected_components(g, members));
  return merge_partitions(cs, inner);
}

}  // namespace tascom
