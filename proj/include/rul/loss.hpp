#pragma once

#include <span>
#include <vector>

namespace rul {

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // dLoss/dPrediction, (2/n)(pred - target)
};

/// Mean squared error over n >= 1 predictions.
LossResult mse_loss(std::span<const double> predictions, std::span<const double> targets);

}  // namespace rul
