#pragma once

#include <cstdint>
#include <stdexcept>

#include <json.hpp>

#include "rul/tensor_set.hpp"

namespace rul {

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamHyperparams {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamHyperparams&, const AdamHyperparams&) = default;
};

struct AdamState {
  AdamHyperparams hyper;
  std::uint64_t step = 0;
  TensorSet m;
  TensorSet v;

  nlohmann::json to_json() const;
  static AdamState from_json(const nlohmann::json& j);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

AdamState adam_init(const TensorSet& params, const AdamHyperparams& hyper = {});

/// One bias-corrected Adam update. Throws NonFiniteError, naming the tensor,
/// before touching any state if a gradient entry is NaN/Inf.
void adam_step(AdamState& state, TensorSet& params, const GradientSet& grads);

}  // namespace rul
