#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "tascom/graph.hpp"
#include "tascom/loss.hpp"

namespace tascom {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
inline constexpr double kSeluScale = 1.0507009873554804934193349852946;
// Stabilizer for the row-sum and row-norm denominators of the embedding transform.
inline constexpr double kTransformEps = 1e-12;

// D^{-1/2} A D^{-1/2} without self-loops; isolated nodes get empty rows.
SparseMatrix normalized_adjacency(const Graph& g);

/// Graph convolutional encoder: X_{l+1} = selu(A_norm X_l W_l) for each layer,
/// followed by the positive-orthant embedding transform.
class GcnModel {
 public:
  static std::vector<std::size_t> default_layers() { return {256, 128, 64}; }

  GcnModel(const Graph& g, std::size_t input_dim, std::vector<std::size_t> layer_dims, std::uint64_t seed);
  GcnModel(const Graph& g, std::size_t input_dim, std::uint64_t seed)
      : GcnModel(g, input_dim, default_layers(), seed) {}

  std::size_t input_dim() const { return static_cast<std::size_t>(weights_.front().rows()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(weights_.back().cols()); }
  std::size_t num_nodes() const { return static_cast<std::size_t>(adjacency_.rows()); }
  std::uint64_t seed() const { return seed_; }

  const SparseMatrix& adjacency() const { return adjacency_; }
  std::vector<Matrix>& weights() { return weights_; }
  const std::vector<Matrix>& weights() const { return weights_; }

 private:
  SparseMatrix adjacency_;
  std::vector<Matrix> weights_;
  std::uint64_t seed_ = 0;
};

// A_norm X, computed once per input and reused every epoch.
struct PropagatedInput {
  SparseMatrix features;
};

PropagatedInput propagate_input(const GcnModel& model, const Matrix& x);

struct ForwardCache {
  std::vector<Matrix> inputs;       // A_norm H_{l-1}; empty for layer 0 (see PropagatedInput)
  std::vector<Matrix> pre_activations;
  std::vector<Matrix> activations;
  Eigen::VectorXd row_divisor;      // row sum of the last activation, pushed away from 0
  Matrix scaled;                    // activation / row_divisor
  Matrix squashed;                  // tanh(scaled)
  Eigen::VectorXd squashed_norm;    // ||tanh row||
  Matrix squared;                   // tanh^2 / (||tanh row|| + eps)
  Eigen::VectorXd squared_norm;     // ||squared row||
  Matrix embedding;                 // unit rows, non-negative entries
};

ForwardCache forward(const GcnModel& model, const PropagatedInput& input);
ForwardCache forward(const GcnModel& model, const Matrix& x);

/// Exact reverse-mode gradients of a scalar loss with respect to every weight
/// matrix, given dL/d(embedding).
std::vector<Matrix> backward(const GcnModel& model, const PropagatedInput& input, const ForwardCache& cache,
                             const Matrix& grad_embedding);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(const std::vector<Matrix>& params, AdamConfig cfg);
  void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads);
  std::int64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  std::int64_t t_ = 0;
};

using LossProvider = std::function<LossValue(const Matrix& embedding)>;

struct TrainConfig {
  int epochs = 300;
  AdamConfig adam;
};

struct TrainResult {
  std::vector<double> loss_trace;  // loss before each update
};

/// Full-batch Adam training. Throws RuntimeFailure on a non-finite loss.
TrainResult train(GcnModel& model, const Matrix& x, const LossProvider& loss, const TrainConfig& cfg);

Matrix embed(const GcnModel& model, const Matrix& x);

/// Binary checkpoint: magic "TASCOMGC", u32 version, u64 seed, u32 layer count,
/// u64 dims (input first), then each weight matrix as row-major little-endian f64.
void save_checkpoint(const GcnModel& model, const std::filesystem::path& path);
void load_checkpoint(GcnModel& model, const std::filesystem::path& path);

}  // namespace tascom
