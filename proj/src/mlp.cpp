#include "rul/mlp.hpp"

#include <cmath>

namespace rul {

void MlpSpec::validate() const {
  if (inputs == 0) throw ConfigError("mlp: input size must be positive");
  for (std::size_t h : hidden)
    if (h == 0) throw ConfigError("mlp: hidden layer sizes must be positive");
}

nlohmann::json MlpSpec::to_json() const {
  return {{"inputs", inputs}, {"hidden", hidden}, {"hidden_activation", "relu"}, {"output", "linear"}};
}

MlpSpec MlpSpec::from_json(const nlohmann::json& j) {
  MlpSpec s;
  s.inputs = j.at("inputs").get<std::size_t>();
  s.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  s.validate();
  return s;
}

namespace {

std::vector<std::size_t> layer_widths(const MlpSpec& spec) {
  std::vector<std::size_t> widths{spec.inputs};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(1);
  return widths;
}

}  // namespace

MlpParams init_mlp(const MlpSpec& spec, SeededRng& rng) {
  spec.validate();
  const auto widths = layer_widths(spec);
  TensorSet t;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    t.add("W" + std::to_string(l), rng_uniform(rng, -bound, bound, widths[l + 1], widths[l]));
    t.add("b" + std::to_string(l), Matrix(1, widths[l + 1]));
  }
  return {spec, std::move(t)};
}

MlpParams make_mlp(const MlpSpec& spec, TensorSet tensors) {
  spec.validate();
  const auto widths = layer_widths(spec);
  if (tensors.size() != 2 * (widths.size() - 1))
    throw ShapeError("mlp: expected " + std::to_string(2 * (widths.size() - 1)) + " tensors");
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Matrix& w = tensors[2 * l];
    const Matrix& b = tensors[2 * l + 1];
    if (w.rows() != widths[l + 1] || w.cols() != widths[l] || b.rows() != 1 ||
        b.cols() != widths[l + 1]) {
      throw ShapeError("mlp: layer " + std::to_string(l) + " has W" + w.shape_string() + " b" +
                       b.shape_string());
    }
  }
  return {spec, std::move(tensors)};
}

MlpForward mlp_forward(const MlpParams& params, const Matrix& x) {
  if (x.cols() != params.spec.inputs) {
    throw ShapeError("mlp_forward: input " + x.shape_string() + " but network expects " +
                     std::to_string(params.spec.inputs) + " features");
  }
  MlpForward out;
  Matrix a = x;
  const std::size_t n_layers = params.layers();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Matrix z = matmul_a_bt(a, params.weight(l));
    add_row_broadcast(z, params.bias(l));
    out.cache.inputs.push_back(std::move(a));
    if (l + 1 == n_layers) {
      out.predictions.assign(z.data().begin(), z.data().end());
    } else {
      a = elementwise(Activation::relu, z);
      out.cache.pre_activations.push_back(std::move(z));
    }
  }
  return out;
}

double mlp_predict(const MlpParams& params, std::span<const double> features) {
  Matrix x(1, features.size(), std::vector<double>(features.begin(), features.end()));
  return mlp_forward(params, x).predictions[0];
}

GradientSet mlp_backward(const MlpParams& params, const MlpCache& cache,
                         std::span<const double> dloss_dpred) {
  const std::size_t n_layers = params.layers();
  if (cache.inputs.size() != n_layers || cache.pre_activations.size() + 1 != n_layers)
    throw ShapeError("mlp_backward: cache does not match the network depth");
  const std::size_t batch = cache.inputs.front().rows();
  if (dloss_dpred.size() != batch) {
    throw ShapeError("mlp_backward: " + std::to_string(dloss_dpred.size()) +
                     " loss gradients for a batch of " + std::to_string(batch));
  }

  GradientSet grads = params.tensors.zeros_like();
  Matrix delta(batch, 1, std::vector<double>(dloss_dpred.begin(), dloss_dpred.end()));
  for (std::size_t l = n_layers; l-- > 0;) {
    matmul_at_b_add(delta, cache.inputs[l], grads[2 * l]);
    column_sums_add(delta, grads[2 * l + 1]);
    if (l == 0) break;
    Matrix upstream = matmul(delta, params.weight(l));
    const Matrix& z = cache.pre_activations[l - 1];
    for (std::size_t i = 0; i < upstream.size(); ++i)
      if (!(z.data()[i] > 0.0)) upstream.data()[i] = 0.0;
    delta = std::move(upstream);
  }
  return grads;
}

}  // namespace rul
