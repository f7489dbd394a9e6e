#include "rul/loss.hpp"

#include <stdexcept>
#include <string>

#include "rul/matrix.hpp"

namespace rul {

LossResult mse_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.empty()) throw std::invalid_argument("mse_loss: empty input");
  if (predictions.size() != targets.size()) {
    throw ShapeError("mse_loss: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(targets.size()) + " targets");
  }
  const double n = static_cast<double>(predictions.size());
  LossResult r;
  r.grad.resize(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - targets[i];
    r.loss += e * e;
    r.grad[i] = 2.0 * e / n;
  }
  r.loss /= n;
  return r;
}

}  // namespace rul
