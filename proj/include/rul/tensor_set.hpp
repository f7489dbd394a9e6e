#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rul/matrix.hpp"

namespace rul {

/// Ordered, named parameter tensors. Gradients and optimizer moments use the
/// same type, shape-congruent with the parameters they belong to.
struct TensorSet {
  std::vector<std::string> names;
  std::vector<Matrix> tensors;

  std::size_t size() const { return tensors.size(); }
  Matrix& operator[](std::size_t i) { return tensors[i]; }
  const Matrix& operator[](std::size_t i) const { return tensors[i]; }

  void add(std::string name, Matrix m);
  TensorSet zeros_like() const;
  bool congruent(const TensorSet& other) const;
  void require_congruent(const TensorSet& other, const char* context) const;
  std::size_t parameter_count() const;
  double squared_norm() const;
  void scale(double s);
  /// Name of the first tensor holding a NaN/Inf, or empty.
  std::string first_non_finite() const;

  nlohmann::json to_json() const;
  static TensorSet from_json(const nlohmann::json& j);

  friend bool operator==(const TensorSet&, const TensorSet&) = default;
};

using GradientSet = TensorSet;

}  // namespace rul
