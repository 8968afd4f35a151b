#include "risbc/mlp.hpp"

#include <cmath>
#include <string>

#include "risbc/errors.hpp"

namespace risbc {

namespace {

using nlohmann::json;

std::string dims_string(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

json matrix_to_json(const Matrix& m) {
  return json(std::vector<double>(m.data(), m.data() + m.size()));
}

json vector_to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

void matrix_from_json(const json& doc, Matrix& out, const char* what) {
  const auto flat = doc.get<std::vector<double>>();
  if (flat.size() != static_cast<std::size_t>(out.size()))
    throw ArtifactError(std::string("checkpoint ") + what + " has " + std::to_string(flat.size()) +
                        " entries, expected " + std::to_string(out.size()));
  std::copy(flat.begin(), flat.end(), out.data());
}

void vector_from_json(const json& doc, Vector& out, const char* what) {
  const auto flat = doc.get<std::vector<double>>();
  if (flat.size() != static_cast<std::size_t>(out.size()))
    throw ArtifactError(std::string("checkpoint ") + what + " has " + std::to_string(flat.size()) +
                        " entries, expected " + std::to_string(out.size()));
  std::copy(flat.begin(), flat.end(), out.data());
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> layer_dims, AdamParams adam) : dims_(std::move(layer_dims)), adam_(adam) {
  if (dims_.size() < 2) throw ShapeError("an MLP needs at least an input and an output width");
  for (std::size_t d : dims_) {
    if (d == 0) throw ShapeError("layer widths must be positive");
  }
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(dims_[l + 1]);
    const auto cols = static_cast<Eigen::Index>(dims_[l]);
    weights_.push_back(Matrix::Zero(rows, cols));
    biases_.push_back(Vector::Zero(rows));
  }
  m_ = zero_like();
  v_ = zero_like();
}

Mlp::Mlp(std::vector<std::size_t> layer_dims, Rng& rng, AdamParams adam) : Mlp(std::move(layer_dims), adam) {
  for (auto& w : weights_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.cols()));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = (2.0 * rng.uniform() - 1.0) * limit;
  }
}

Mlp Mlp::zeros(std::vector<std::size_t> layer_dims, AdamParams adam) { return Mlp(std::move(layer_dims), adam); }

Gradients Mlp::zero_like() const {
  Gradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Vector::Zero(biases_[l].size()));
  }
  return g;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  if (x.size() != input_width())
    throw ShapeError("forward: input has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(input_width()));
  // One-row batch, so single and batched passes round identically.
  const Matrix y = forward_batch(Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size())));
  return {y.data(), y.data() + y.size()};
}

Matrix Mlp::forward_batch(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != input_width())
    throw ShapeError("forward_batch: input is " + dims_string(x.rows(), x.cols()) + ", expected width " +
                     std::to_string(input_width()));
  Matrix a = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = a * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    if (l + 1 < weights_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

LossAndGradients Mlp::backward_mse(std::span<const double> x, std::span<const double> target,
                                   std::optional<std::size_t> masked_output) const {
  if (x.size() != input_width())
    throw ShapeError("backward_mse: input has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(input_width()));
  const auto out = static_cast<Eigen::Index>(output_width());
  Matrix xs = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  Matrix t = Matrix::Zero(1, out);
  Matrix mask = Matrix::Zero(1, out);
  if (masked_output) {
    if (*masked_output >= output_width())
      throw ShapeError("backward_mse: masked output " + std::to_string(*masked_output) + " out of range");
    if (target.size() != 1 && target.size() != output_width())
      throw ShapeError("backward_mse: masked target must have 1 or " + std::to_string(output_width()) + " entries");
    const auto a = static_cast<Eigen::Index>(*masked_output);
    t(0, a) = target.size() == 1 ? target[0] : target[*masked_output];
    mask(0, a) = 1.0;
  } else {
    if (target.size() != output_width())
      throw ShapeError("backward_mse: target has " + std::to_string(target.size()) + " entries, expected " +
                       std::to_string(output_width()));
    t = Eigen::Map<const Matrix>(target.data(), 1, out);
    mask.setOnes();
  }
  return backward_masked(xs, t, mask);
}

LossAndGradients Mlp::backward_masked(const Matrix& x, const Matrix& target, const Matrix& mask) const {
  const Eigen::Index n = x.rows();
  const auto out = static_cast<Eigen::Index>(output_width());
  if (static_cast<std::size_t>(x.cols()) != input_width() || target.rows() != n || target.cols() != out ||
      mask.rows() != n || mask.cols() != out)
    throw ShapeError("backward_masked: got x " + dims_string(x.rows(), x.cols()) + ", target " +
                     dims_string(target.rows(), target.cols()) + ", mask " + dims_string(mask.rows(), mask.cols()));
  const double count = mask.sum();
  if (!(count > 0.0)) throw ShapeError("backward_masked: mask selects no outputs");

  const std::size_t layers = weights_.size();
  // activations[0] = x, activations[l + 1] = output of layer l.
  std::vector<Matrix> activations;
  activations.reserve(layers + 1);
  activations.push_back(x);
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = activations.back() * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    activations.push_back(std::move(z));
  }

  const Matrix residual = mask.cwiseProduct(activations.back() - target);
  LossAndGradients result;
  result.loss = residual.squaredNorm() / count;
  result.grads.weights.resize(layers);
  result.grads.biases.resize(layers);

  Matrix delta = (2.0 / count) * residual;
  for (std::size_t l = layers; l-- > 0;) {
    result.grads.weights[l] = delta.transpose() * activations[l];
    result.grads.biases[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Matrix upstream = delta * weights_[l];
    // ReLU derivative: activations[l] is post-ReLU, so > 0 exactly where z > 0.
    delta = upstream.cwiseProduct((activations[l].array() > 0.0).cast<double>().matrix());
  }
  return result;
}

void Mlp::check_grads(const Gradients& grads) const {
  if (grads.weights.size() != weights_.size() || grads.biases.size() != biases_.size())
    throw ShapeError("gradient set has the wrong number of layers");
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (grads.weights[l].rows() != weights_[l].rows() || grads.weights[l].cols() != weights_[l].cols() ||
        grads.biases[l].size() != biases_[l].size())
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(l));
  }
}

void Mlp::adam_step(const Gradients& grads) {
  check_grads(grads);
  ++step_;
  const double b1 = adam_.beta1;
  const double b2 = adam_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double lr = adam_.learning_rate;
  const double eps = adam_.epsilon;

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    update(weights_[l], grads.weights[l], m_.weights[l], v_.weights[l]);
    update(biases_[l], grads.biases[l], m_.biases[l], v_.biases[l]);
  }
}

json Mlp::to_json() const {
  json layers = json::array();
  json adam_layers = json::array();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    layers.push_back({{"weights", matrix_to_json(weights_[l])}, {"biases", vector_to_json(biases_[l])}});
    adam_layers.push_back({{"m_weights", matrix_to_json(m_.weights[l])},
                           {"v_weights", matrix_to_json(v_.weights[l])},
                           {"m_biases", vector_to_json(m_.biases[l])},
                           {"v_biases", vector_to_json(v_.biases[l])}});
  }
  return json{{"layer_dims", dims_},
              {"layers", layers},
              {"adam",
               {{"learning_rate", adam_.learning_rate},
                {"beta1", adam_.beta1},
                {"beta2", adam_.beta2},
                {"epsilon", adam_.epsilon},
                {"step", step_},
                {"layers", adam_layers}}}};
}

Mlp Mlp::from_json(const json& doc) {
  try {
    AdamParams adam;
    const json& a = doc.at("adam");
    adam.learning_rate = a.at("learning_rate").get<double>();
    adam.beta1 = a.at("beta1").get<double>();
    adam.beta2 = a.at("beta2").get<double>();
    adam.epsilon = a.at("epsilon").get<double>();
    Mlp net(doc.at("layer_dims").get<std::vector<std::size_t>>(), adam);
    net.step_ = a.at("step").get<std::uint64_t>();

    const json& layers = doc.at("layers");
    const json& adam_layers = a.at("layers");
    if (layers.size() != net.weights_.size() || adam_layers.size() != net.weights_.size())
      throw ArtifactError("checkpoint layer count does not match layer_dims");
    for (std::size_t l = 0; l < net.weights_.size(); ++l) {
      matrix_from_json(layers[l].at("weights"), net.weights_[l], "weights");
      vector_from_json(layers[l].at("biases"), net.biases_[l], "biases");
      matrix_from_json(adam_layers[l].at("m_weights"), net.m_.weights[l], "m_weights");
      matrix_from_json(adam_layers[l].at("v_weights"), net.v_.weights[l], "v_weights");
      vector_from_json(adam_layers[l].at("m_biases"), net.m_.biases[l], "m_biases");
      vector_from_json(adam_layers[l].at("v_biases"), net.v_.biases[l], "v_biases");
    }
    return net;
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("malformed network checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw ArtifactError(std::string("malformed network checkpoint: ") + e.what());
  }
}

}  // namespace risbc
