#pragma once

#include <Eigen/Dense>

#include "tascom/graph.hpp"

namespace tascom {

using Matrix = Eigen::MatrixXd;

/// Co-membership matrix H = S S^T of a partition, kept as its one-hot factor S
/// (one community id per row). H itself is never formed.
class PairwiseTarget {
 public:
  explicit PairwiseTarget(const Partition& p);

  std::size_t size() const { return assignment_.size(); }
  std::size_t num_communities() const { return sizes_.size(); }
  CommunityId community(NodeId v) const { return assignment_[v]; }
  // ||H||_F^2 = sum of squared community sizes.
  double squared_norm() const { return squared_norm_; }
  // S^T X: per-community sums of embedding rows.
  Matrix community_sums(const Matrix& x) const;

 private:
  std::vector<CommunityId> assignment_;
  std::vector<std::size_t> sizes_;
  double squared_norm_ = 0.0;
};

struct LossValue {
  double value = 0.0;
  Matrix gradient;  // dL/dX, same shape as the embedding
};

/// (1/n^2) ||H - X X^T||_F^2 and its gradient (4/n^2)(X X^T - H) X, evaluated
/// through d x d and k x d products only.
LossValue pairwise_loss(const PairwiseTarget& target, const Matrix& x);

struct LossConfig {
  double mu = 0.5;
};

// L = L_M + mu * L_R.
LossValue total_loss(const PairwiseTarget& modularity_target, const PairwiseTarget& label_target, const Matrix& x,
                     const LossConfig& cfg);

}  // namespace tascom
