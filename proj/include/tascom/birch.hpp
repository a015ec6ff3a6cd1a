#pragma once

#include <Eigen/Dense>

#include "tascom/graph.hpp"

namespace tascom {

/// Clustering feature (N, LS, SS) of a set of points.
struct ClusteringFeature {
  std::size_t count = 0;
  Eigen::VectorXd linear_sum;
  double squared_sum = 0.0;

  static ClusteringFeature of_point(const Eigen::VectorXd& x);
  ClusteringFeature& operator+=(const ClusteringFeature& other);

  Eigen::VectorXd centroid() const;
  // sqrt(SS/N - |LS/N|^2), clamped at zero.
  double radius() const;
};

ClusteringFeature operator+(ClusteringFeature a, const ClusteringFeature& b);

struct BirchConfig {
  double threshold_radius = 0.15;
  std::size_t branching_factor = 50;
};

/// Builds a CF tree over the rows of `points` (in row order) and returns its
/// leaf subclusters as communities. No global clustering pass is applied, so
/// the number of communities follows from the threshold.
Partition birch_cluster(const Eigen::MatrixXd& points, const BirchConfig& cfg);

}  // namespace tascom
