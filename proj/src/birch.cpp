#include "tascom/birch.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <utility>

#include "tascom/error.hpp"

namespace tascom {

ClusteringFeature ClusteringFeature::of_point(const Eigen::VectorXd& x) {
  return ClusteringFeature{1, x, x.squaredNorm()};
}

ClusteringFeature& ClusteringFeature::operator+=(const ClusteringFeature& other) {
  if (count == 0) return *this = other;
  count += other.count;
  linear_sum += other.linear_sum;
  squared_sum += other.squared_sum;
  return *this;
}

ClusteringFeature operator+(ClusteringFeature a, const ClusteringFeature& b) { return a += b; }

Eigen::VectorXd ClusteringFeature::centroid() const { return linear_sum / static_cast<double>(count); }

double ClusteringFeature::radius() const {
  const double n = static_cast<double>(count);
  const double r2 = squared_sum / n - (linear_sum / n).squaredNorm();
  return std::sqrt(std::max(r2, 0.0));
}

namespace {

struct Node;

struct Entry {
  ClusteringFeature cf;
  std::unique_ptr<Node> child;     // non-leaf entries
  std::vector<std::size_t> members;  // leaf entries
};

struct Node {
  bool leaf = true;
  std::vector<Entry> entries;
};

using Split = std::pair<Entry, Entry>;

std::size_t closest(const Node& node, const Eigen::VectorXd& x) {
  std::size_t best = 0;
  double best_d = (node.entries[0].cf.centroid() - x).squaredNorm();
  for (std::size_t i = 1; i < node.entries.size(); ++i) {
    const double d = (node.entries[i].cf.centroid() - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

// Splits an overflowing node around its two most distant entries.
Split split_node(Node& node) {
  const std::size_t count = node.entries.size();
  std::vector<Eigen::VectorXd> centroids;
  centroids.reserve(count);
  for (const auto& e : node.entries) centroids.push_back(e.cf.centroid());

  std::size_t seed_a = 0, seed_b = 1;
  double farthest = -1.0;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) {
      const double d = (centroids[i] - centroids[j]).squaredNorm();
      if (d > farthest) {
        farthest = d;
        seed_a = i;
        seed_b = j;
      }
    }
  }

  auto left = std::make_unique<Node>();
  auto right = std::make_unique<Node>();
  left->leaf = right->leaf = node.leaf;
  Entry l, r;
  for (std::size_t i = 0; i < count; ++i) {
    bool to_left;
    if (i == seed_a) to_left = true;
    else if (i == seed_b) to_left = false;
    else to_left = (centroids[i] - centroids[seed_a]).squaredNorm() <= (centroids[i] - centroids[seed_b]).squaredNorm();
    Entry& target = to_left ? l : r;
    target.cf += node.entries[i].cf;
    (to_left ? left : right)->entries.push_back(std::move(node.entries[i]));
  }
  l.child = std::move(left);
  r.child = std::move(right);
  return {std::move(l), std::move(r)};
}

std::optional<Split> insert(Node& node, const Eigen::VectorXd& x, std::size_t index, const BirchConfig& cfg) {
  const auto point = ClusteringFeature::of_point(x);
  if (node.entries.empty()) {
    node.entries.push_back(Entry{point, nullptr, {index}});
    return std::nullopt;
  }
  const std::size_t i = closest(node, x);
  if (!node.leaf) {
    auto split = insert(*node.entries[i].child, x, index, cfg);
    if (!split) {
      node.entries[i].cf += point;
      return std::nullopt;
    }
    node.entries[i] = std::move(split->first);
    node.entries.insert(node.entries.begin() + static_cast<std::ptrdiff_t>(i) + 1, std::move(split->second));
  } else {
    auto merged = node.entries[i].cf + point;
    if (merged.radius() <= cfg.threshold_radius) {
      node.entries[i].cf = std::move(merged);
      node.entries[i].members.push_back(index);
      return std::nullopt;
    }
    node.entries.push_back(Entry{point, nullptr, {index}});
  }
  if (node.entries.size() > cfg.branching_factor) return split_node(node);
  return std::nullopt;
}

void collect_leaves(const Node& node, std::vector<std::size_t>& labels, std::size_t& next) {
  for (const auto& e : node.entries) {
    if (node.leaf) {
      for (auto m : e.members) labels[m] = next;
      ++next;
    } else {
      collect_leaves(*e.child, labels, next);
    }
  }
}

}  // namespace

Partition birch_cluster(const Eigen::MatrixXd& points, const BirchConfig& cfg) {
  if (!(cfg.threshold_radius > 0.0)) throw PreconditionError("BirchConfig.threshold_radius must be > 0");
  if (cfg.branching_factor < 2) throw PreconditionError("BirchConfig.branching_factor must be >= 2");
  if (points.rows() == 0) throw PreconditionError("birch_cluster needs at least one point");

  auto root = std::make_unique<Node>();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::VectorXd x = points.row(i).transpose();
    auto split = insert(*root, x, static_cast<std::size_t>(i), cfg);
    if (split) {
      auto new_root = std::make_unique<Node>();
      new_root->leaf = false;
      new_root->entries.push_back(std::move(split->first));
      new_root->entries.push_back(std::move(split->second));
      root = std::move(new_root);
    }
  }
  std::vector<std::size_t> labels(static_cast<std::size_t>(points.rows()), 0);
  std::size_t next = 0;
  collect_leaves(*root, labels, next);
  return relabel_dense(labels);
}

}  // namespace tascom
