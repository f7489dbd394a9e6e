#include "rul/tensor_set.hpp"

namespace rul {

void TensorSet::add(std::string name, Matrix m) {
  names.push_back(std::move(name));
  tensors.push_back(std::move(m));
}

TensorSet TensorSet::zeros_like() const {
  TensorSet out;
  for (std::size_t i = 0; i < size(); ++i)
    out.add(names[i], Matrix(tensors[i].rows(), tensors[i].cols()));
  return out;
}

bool TensorSet::congruent(const TensorSet& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i)
    if (!tensors[i].same_shape(other.tensors[i])) return false;
  return true;
}

void TensorSet::require_congruent(const TensorSet& other, const char* context) const {
  if (size() != other.size()) {
    throw ShapeError(std::string(context) + ": tensor count " + std::to_string(size()) + " vs " +
                     std::to_string(other.size()));
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (!tensors[i].same_shape(other.tensors[i])) {
      throw ShapeError(std::string(context) + ": tensor '" + names[i] + "' " +
                       tensors[i].shape_string() + " vs " + other.tensors[i].shape_string());
    }
  }
}

std::size_t TensorSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

double TensorSet::squared_norm() const {
  double s = 0.0;
  for (const auto& t : tensors)
    for (double v : t.data()) s += v * v;
  return s;
}

void TensorSet::scale(double s) {
  for (auto& t : tensors) t *= s;
}

std::string TensorSet::first_non_finite() const {
  for (std::size_t i = 0; i < size(); ++i)
    if (!tensors[i].all_finite()) return names[i];
  return {};
}

nlohmann::json TensorSet::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < size(); ++i) {
    arr.push_back({{"name", names[i]},
                   {"rows", tensors[i].rows()},
                   {"cols", tensors[i].cols()},
                   {"data", tensors[i].data()}});
  }
  return arr;
}

TensorSet TensorSet::from_json(const nlohmann::json& j) {
  TensorSet out;
  for (const auto& item : j) {
    out.add(item.at("name").get<std::string>(),
            Matrix(item.at("rows").get<std::size_t>(), item.at("cols").get<std::size_t>(),
                   item.at("data").get<std::vector<double>>()));
  }
  return out;
}

}  // namespace rul
