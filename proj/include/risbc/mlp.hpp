#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "risbc/rng.hpp"

namespace risbc {

// Row-major so that a layer's weights flatten to the checkpoint layout
// directly: weights(i, j) connects input j to output unit i.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One tensor per parameter tensor of the network, same shapes.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

// Dense feed-forward network: affine + ReLU on every hidden layer, affine
// output head. Carries its own Adam state.
class Mlp {
 public:
  // He-uniform initialisation: weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)),
  // biases zero.
  Mlp(std::vector<std::size_t> layer_dims, Rng& rng, AdamParams adam = {});

  // All weights and biases zero.
  static Mlp zeros(std::vector<std::size_t> layer_dims, AdamParams adam = {});

  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  std::size_t num_layers() const { return weights_.size(); }
  std::size_t input_width() const { return dims_.front(); }
  std::size_t output_width() const { return dims_.back(); }

  Matrix& weights(std::size_t layer) { return weights_.at(layer); }
  const Matrix& weights(std::size_t layer) const { return weights_.at(layer); }
  Vector& biases(std::size_t layer) { return biases_.at(layer); }
  const Vector& biases(std::size_t layer) const { return biases_.at(layer); }

  const AdamParams& adam_params() const { return adam_; }
  std::uint64_t adam_steps() const { return step_; }
  const Gradients& adam_first_moment() const { return m_; }
  const Gradients& adam_second_moment() const { return v_; }

  std::vector<double> forward(std::span<const double> x) const;
  // One sample per row.
  Matrix forward_batch(const Matrix& x) const;

  // Mean squared error over the whole output, or over the single output
  // `masked_output` when given. target has output_width() entries, or exactly
  // one entry in the masked case.
  LossAndGradients backward_mse(std::span<const double> x, std::span<const double> target,
                                std::optional<std::size_t> masked_output = std::nullopt) const;

  // Batched masked MSE: loss = sum(mask * (y - target)^2) / sum(mask).
  // x is n x input_width; target and mask are n x output_width.
  LossAndGradients backward_masked(const Matrix& x, const Matrix& target, const Matrix& mask) const;

  // Bias-corrected Adam update with the stored hyperparameters.
  void adam_step(const Gradients& grads);

  // layer_dims, row-major flat weights and biases per layer, Adam state.
  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& doc);

  Gradients zero_like() const;

 private:
  Mlp(std::vector<std::size_t> layer_dims, AdamParams adam);

  void check_grads(const Gradients& grads) const;

  std::vector<std::size_t> dims_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  AdamParams adam_;
  std::uint64_t step_ = 0;
  Gradients m_;
  Gradients v_;
};

}  // namespace risbc
