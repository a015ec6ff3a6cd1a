#include "tascom/loss.hpp"

#include <algorithm>
#include <string>

#include "tascom/error.hpp"

namespace tascom {

PairwiseTarget::PairwiseTarget(const Partition& p)
    : assignment_(p.assignment()), sizes_(p.community_sizes()) {
  for (auto s : sizes_) squared_norm_ += static_cast<double>(s) * static_cast<double>(s);
}

Matrix PairwiseTarget::community_sums(const Matrix& x) const {
  Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(num_communities()), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) sums.row(static_cast<Eigen::Index>(assignment_[i])) += x.row(i);
  return sums;
}

LossValue pairwise_loss(const PairwiseTarget& target, const Matrix& x) {
  if (static_cast<std::size_t>(x.rows()) != target.size()) {
    throw PreconditionError("pairwise_loss: embedding has " + std::to_string(x.rows()) + " rows, target covers " +
                            std::to_string(target.size()) + " nodes");
  }
  const double n = static_cast<double>(x.rows());
  if (x.rows() == 0) return {0.0, Matrix(0, x.cols())};

  const Matrix sx = target.community_sums(x);  // k x d
  const Matrix gram = x.transpose() * x;       // d x d

  // ||H - XX^T||^2 = ||H||^2 - 2 tr(X^T H X) + ||X^T X||^2
  const double value = target.squared_norm() - 2.0 * sx.squaredNorm() + gram.squaredNorm();

  LossValue out;
  out.value = std::max(value, 0.0) / (n * n);
  out.gradient = x * gram;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.gradient.row(i) -= sx.row(static_cast<Eigen::Index>(target.community(static_cast<NodeId>(i))));
  }
  out.gradient *= 4.0 / (n * n);
  return out;
}

LossValue total_loss(const PairwiseTarget& modularity_target, const PairwiseTarget& label_target, const Matrix& x,
                     const LossConfig& cfg) {
  if (cfg.mu < 0.0) throw PreconditionError("LossConfig.mu must be >= 0");
  if (modularity_target.size() != label_target.size()) {
    throw PreconditionError("total_loss: targets cover different node counts");
  }
  auto lm = pairwise_loss(modularity_target, x);
  if (cfg.mu == 0.0) return lm;
  auto lr = pairwise_loss(label_target, x);
  lm.value += cfg.mu * lr.value;
  lm.gradient += cfg.mu * lr.gradient;
  return lm;
}

}  // namespace tascom
