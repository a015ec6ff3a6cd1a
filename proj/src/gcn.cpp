#include "tascom/gcn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "tascom/error.hpp"

namespace tascom {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'T', 'A', 'S', 'C', 'O', 'M', 'G', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

double selu(double z) { return z > 0.0 ? kSeluScale * z : kSeluScale * kSeluAlpha * std::expm1(z); }
double selu_grad(double z) { return z > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(z); }

void check_input(const GcnModel& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.rows()) != model.num_nodes() ||
      static_cast<std::size_t>(x.cols()) != model.input_dim()) {
    throw PreconditionError("GCN input is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                            ", model expects " + std::to_string(model.num_nodes()) + "x" +
                            std::to_string(model.input_dim()));
  }
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("checkpoint truncated");
  return v;
}

}  // namespace

SparseMatrix normalized_adjacency(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(2 * g.num_edges());
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const double du = static_cast<double>(g.degree(u));
    for (NodeId v : g.neighbors(u)) {
      const double dv = static_cast<double>(g.degree(v));
      entries.emplace_back(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v), 1.0 / std::sqrt(du * dv));
    }
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

GcnModel::GcnModel(const Graph& g, std::size_t input_dim, std::vector<std::size_t> layer_dims, std::uint64_t seed)
    : adjacency_(normalized_adjacency(g)), seed_(seed) {
  if (input_dim == 0 || layer_dims.empty()) throw PreconditionError("GCN needs input_dim >= 1 and >= 1 layer");
  std::mt19937_64 rng(seed);
  std::size_t fan_in = input_dim;
  for (std::size_t fan_out : layer_dims) {
    if (fan_out == 0) throw PreconditionError("GCN layer width must be >= 1");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
    weights_.push_back(std::move(w));
    fan_in = fan_out;
  }
}

PropagatedInput propagate_input(const GcnModel& model, const Matrix& x) {
  check_input(model, x);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x.data()[i])) throw DataError("attribute matrix contains a non-finite value");
  }
  const Matrix ax = model.adjacency() * x;
  return {ax.sparseView()};
}

ForwardCache forward(const GcnModel& model, const PropagatedInput& input) {
  const auto& w = model.weights();
  const std::size_t layers = w.size();
  ForwardCache c;
  c.inputs.resize(layers);
  c.pre_activations.resize(layers);
  c.activations.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    if (l == 0) {
      c.pre_activations[0] = input.features * w[0];
    } else {
      c.inputs[l] = model.adjacency() * c.activations[l - 1];
      c.pre_activations[l] = c.inputs[l] * w[l];
    }
    c.activations[l] = c.pre_activations[l].unaryExpr(&selu);
  }

  const Matrix& h = c.activations.back();
  const Eigen::Index n = h.rows();
  c.row_divisor = h.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    c.row_divisor(i) += c.row_divisor(i) >= 0.0 ? kTransformEps : -kTransformEps;
  }
  c.scaled = c.row_divisor.cwiseInverse().asDiagonal() * h;
  c.squashed = c.scaled.array().tanh().matrix();
  c.squashed_norm = c.squashed.rowwise().norm();
  c.squared = (c.squashed_norm.array() + kTransformEps).inverse().matrix().asDiagonal() *
              c.squashed.cwiseAbs2();
  c.squared_norm = c.squared.rowwise().norm();
  c.embedding = c.squared_norm.cwiseMax(kTransformEps).cwiseInverse().asDiagonal() * c.squared;
  return c;
}

ForwardCache forward(const GcnModel& model, const Matrix& x) { return forward(model, propagate_input(model, x)); }

std::vector<Matrix> backward(const GcnModel& model, const PropagatedInput& input, const ForwardCache& c,
                             const Matrix& grad_embedding) {
  if (grad_embedding.rows() != c.embedding.rows() || grad_embedding.cols() != c.embedding.cols()) {
    throw PreconditionError("backward: gradient shape does not match the embedding");
  }
  const Eigen::Index n = c.embedding.rows();

  // Row renormalization: E = Y / max(|Y|, eps).
  Matrix d_squared(grad_embedding.rows(), grad_embedding.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double q = c.squared_norm(i);
    if (q > kTransformEps) {
      const double proj = c.embedding.row(i).dot(grad_embedding.row(i));
      d_squared.row(i) = (grad_embedding.row(i) - proj * c.embedding.row(i)) / q;
    } else {
      d_squared.row(i) = grad_embedding.row(i) / kTransformEps;
    }
  }

  // Y = T^2 / (|T| + eps).
  Matrix d_squashed(d_squared.rows(), d_squared.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = c.squashed_norm(i);
    const double a = r + kTransformEps;
    const auto t = c.squashed.row(i);
    d_squashed.row(i) = (2.0 / a) * d_squared.row(i).cwiseProduct(t);
    if (r > 0.0) {
      const double through_norm = d_squared.row(i).dot(t.cwiseAbs2()) / (a * a);
      d_squashed.row(i) -= (through_norm / r) * t;
    }
  }

  // tanh, then the row-sum division.
  const Matrix d_scaled = d_squashed.cwiseProduct((1.0 - c.squashed.array().square()).matrix());
  const Matrix& h = c.activations.back();
  Matrix d_act(h.rows(), h.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = c.row_divisor(i);
    const double through_sum = d_scaled.row(i).dot(h.row(i)) / (d * d);
    d_act.row(i) = d_scaled.row(i) / d;
    d_act.row(i).array() -= through_sum;
  }

  const auto& w = model.weights();
  std::vector<Matrix> grads(w.size());
  for (std::size_t l = w.size(); l-- > 0;) {
    const Matrix d_pre = d_act.cwiseProduct(c.pre_activations[l].unaryExpr(&selu_grad));
    if (l == 0) {
      grads[0] = input.features.transpose() * d_pre;
    } else {
      grads[l] = c.inputs[l].transpose() * d_pre;
      // A_norm is symmetric.
      d_act = model.adjacency() * (d_pre * w[l].transpose());
    }
  }
  return grads;
}

Adam::Adam(const std::vector<Matrix>& params, AdamConfig cfg) : cfg_(cfg) {
  for (const auto& p : params) {
    first_.push_back(Matrix::Zero(p.rows(), p.cols()));
    second_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void Adam::step(std::vector<Matrix>& params, const std::vector<Matrix>& grads) {
  if (params.size() != first_.size() || grads.size() != first_.size()) {
    throw PreconditionError("Adam::step: parameter count mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    first_[i] = cfg_.beta1 * first_[i] + (1.0 - cfg_.beta1) * grads[i];
    second_[i] = cfg_.beta2 * second_[i] + (1.0 - cfg_.beta2) * grads[i].cwiseAbs2();
    params[i].array() -= cfg_.learning_rate * (first_[i].array() / c1) /
                         ((second_[i].array() / c2).sqrt() + cfg_.epsilon);
  }
}

TrainResult train(GcnModel& model, const Matrix& x, const LossProvider& loss, const TrainConfig& cfg) {
  if (cfg.epochs < 0) throw PreconditionError("epochs must be >= 0");
  const auto input = propagate_input(model, x);
  Adam adam(model.weights(), cfg.adam);
  TrainResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto cache = forward(model, input);
    const auto value = loss(cache.embedding);
    if (!std::isfinite(value.value) || !value.gradient.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite loss at epoch " << epoch;
      if (!result.loss_trace.empty()) msg << " (previous loss " << result.loss_trace.back() << ")";
      msg << "; weight norms:";
      for (const auto& w : model.weights()) msg << ' ' << w.norm();
      throw RuntimeFailure(msg.str());
    }
    result.loss_trace.push_back(value.value);
    const auto grads = backward(model, input, cache, value.gradient);
    adam.step(model.weights(), grads);
  }
  return result;
}

Matrix embed(const GcnModel& model, const Matrix& x) { return forward(model, x).embedding; }

void save_checkpoint(const GcnModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kCheckpointVersion);
  write_pod(out, model.seed());
  const auto& w = model.weights();
  write_pod(out, static_cast<std::uint32_t>(w.size()));
  write_pod(out, static_cast<std::uint64_t>(model.input_dim()));
  for (const auto& m : w) write_pod(out, static_cast<std::uint64_t>(m.cols()));
  for (const auto& m : w) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) write_pod(out, m(r, c));
    }
  }
  if (!out) throw DataError("failed writing checkpoint: " + path.string());
}

void load_checkpoint(GcnModel& model, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DataError("not a checkpoint: " + path.string());
  if (read_pod<std::uint32_t>(in) != kCheckpointVersion) throw DataError("unsupported checkpoint version");
  read_pod<std::uint64_t>(in);  // seed, informational
  const auto layers = read_pod<std::uint32_t>(in);
  auto& w = model.weights();
  if (layers != w.size()) throw DataError("checkpoint layer count does not match the model");
  std::vector<std::uint64_t> dims(layers + 1);
  for (auto& d : dims) d = read_pod<std::uint64_t>(in);
  for (std::size_t l = 0; l < layers; ++l) {
    if (dims[l] != static_cast<std::uint64_t>(w[l].rows()) || dims[l + 1] != static_cast<std::uint64_t>(w[l].cols())) {
      throw DataError("checkpoint dimensions do not match the model");
    }
  }
  for (auto& m : w) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_pod<double>(in);
    }
  }
}

}  // namespace tascom
