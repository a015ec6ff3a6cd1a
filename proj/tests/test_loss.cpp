#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tascom/error.hpp"
#include "tascom/loss.hpp"

using namespace tascom;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

}  // namespace

TEST_CASE("pairwise loss matches the dense formula") {
  std::mt19937_64 rng(40);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + rng() % 25;
    auto p = oracle::random_partition(n, 1 + rng() % 5, rng);
    Matrix x = random_matrix(static_cast<Eigen::Index>(n), 1 + static_cast<Eigen::Index>(rng() % 6), rng);
    auto l = pairwise_loss(PairwiseTarget(p), x);
    CHECK(l.value == doctest::Approx(oracle::dense_pairwise_loss(p, x)).epsilon(1e-12));

    // Dense gradient: (4/n^2) (X X^T - H) X.
    const double nn = static_cast<double>(n * n);
    const Matrix dense = 4.0 / nn * (x * x.transpose() - oracle::co_membership(p)) * x;
    CHECK((l.gradient - dense).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("pairwise loss gradient matches finite differences") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 2 + rng() % 10;
    auto p = oracle::random_partition(n, 3, rng);
    PairwiseTarget target(p);
    Matrix x = random_matrix(static_cast<Eigen::Index>(n), 3, rng);
    auto l = pairwise_loss(target, x);
    auto f = [&] { return pairwise_loss(target, x).value; };
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        CHECK(oracle::relative_error(l.gradient(i, j), oracle::central_difference(f, x, i, j, 1e-5)) <= 1e-6);
  }
}

TEST_CASE("a perfect embedding has zero loss") {
  // One-hot rows reproduce H exactly.
  Partition p(std::vector<CommunityId>{0, 1, 0, 2, 1});
  Matrix x = Matrix::Zero(5, 3);
  for (NodeId v = 0; v < 5; ++v) x(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(p[v])) = 1.0;
  auto l = pairwise_loss(PairwiseTarget(p), x);
  CHECK(l.value == 0.0);
  CHECK(l.gradient.cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("total loss combines both targets") {
  std::mt19937_64 rng(42);
  auto a = oracle::random_partition(12, 3, rng);
  auto b = oracle::random_partition(12, 4, rng);
  PairwiseTarget ta(a), tb(b);
  Matrix x = random_matrix(12, 4, rng);
  auto la = pairwise_loss(ta, x), lb = pairwise_loss(tb, x);
  auto total = total_loss(ta, tb, x, {0.7});
  CHECK(total.value == doctest::Approx(la.value + 0.7 * lb.value).epsilon(1e-14));
  CHECK((total.gradient - (la.gradient + 0.7 * lb.gradient)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(total_loss(ta, tb, x, {0.0}).value == la.value);
  CHECK_THROWS_AS(total_loss(ta, tb, x, {-1.0}), PreconditionError);
  CHECK_THROWS_AS(pairwise_loss(ta, random_matrix(5, 4, rng)), PreconditionError);
  CHECK_THROWS_AS(total_loss(ta, PairwiseTarget(Partition::singletons(3)), x, {}), PreconditionError);
}

TEST_CASE("target keeps community statistics") {
  PairwiseTarget t(Partition(std::vector<CommunityId>{0, 0, 1, 0}));
  CHECK(t.num_communities() == 2);
  CHECK(t.squared_norm() == 10.0);
  CHECK(t.community(2) == 1);
}
