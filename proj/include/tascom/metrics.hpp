#pragma once

#include <cstdint>
#include <vector>

#include "tascom/graph.hpp"

namespace tascom {

/// Contingency table between two partitions of the same node set.
struct ConfusionMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint64_t> counts;  // row-major rows x cols
  std::vector<std::uint64_t> row_sums;
  std::vector<std::uint64_t> col_sums;
  std::uint64_t total = 0;

  std::uint64_t at(std::size_t i, std::size_t j) const { return counts[i * cols + j]; }
};

ConfusionMatrix confusion_matrix(const Partition& c, const Partition& d);

// Newman modularity, resolution 1. Returns 0 for an edgeless graph.
double modularity(const Graph& g, const Partition& cs);

// Normalized mutual information, natural log. Two single-community partitions
// score 1.
double nmi(const Partition& c, const Partition& d);

struct ConductanceResult {
  std::vector<double> per_community;
  double mean = 0.0;
};

// phi(C) = Cut(C, rest) / min(Vol(C), Vol(rest)); phi is 0 when that minimum is 0.
ConductanceResult conductance(const Graph& g, const Partition& cs);

/// Pairwise F1: precision and recall over node pairs co-assigned in `predicted`
/// versus co-assigned in `truth`. Zero when either side has no co-assigned pairs.
double f1_score(const Partition& predicted, const Partition& truth);

// Mean number of connected components per community (1 when all are connected).
double connectivity_score(const Graph& g, const Partition& cs);

// Splits every community into its connected components.
Partition split_disconnected(const Graph& g, const Partition& cs);

}  // namespace tascom
