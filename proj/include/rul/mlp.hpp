#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "rul/rng.hpp"
#include "rul/tensor_set.hpp"

namespace rul {

struct MlpSpec {
  std::size_t inputs = 0;
  std::vector<std::size_t> hidden{64, 32};

  void validate() const;
  nlohmann::json to_json() const;
  static MlpSpec from_json(const nlohmann::json& j);
};

/// Fully connected regressor: relu hidden layers and a linear scalar output.
/// Tensors are stored as W0, b0, W1, b1, ...; W_l is (out x in), b_l is (1 x out).
struct MlpParams {
  MlpSpec spec;
  TensorSet tensors;

  std::size_t layers() const { return tensors.size() / 2; }
  const Matrix& weight(std::size_t l) const { return tensors[2 * l]; }
  const Matrix& bias(std::size_t l) const { return tensors[2 * l + 1]; }
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
MlpParams init_mlp(const MlpSpec& spec, SeededRng& rng);
/// Wraps existing tensors after checking they match the spec.
MlpParams make_mlp(const MlpSpec& spec, TensorSet tensors);

struct MlpCache {
  std::vector<Matrix> inputs;       // input to layer l (batch x in_l)
  std::vector<Matrix> pre_activations;  // W_l x + b_l for hidden layers
};

struct MlpForward {
  std::vector<double> predictions;
  MlpCache cache;
};

/// Batched forward over rows of x (batch x inputs).
MlpForward mlp_forward(const MlpParams& params, const Matrix& x);
double mlp_predict(const MlpParams& params, std::span<const double> features);

GradientSet mlp_backward(const MlpParams& params, const MlpCache& cache,
                         std::span<const double> dloss_dpred);

}  // namespace rul
