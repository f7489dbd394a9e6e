#pragma once

#include <cstdint>
#include <vector>

#include "rul/dataset_io.hpp"

namespace rul {

/// Parameters for a synthetic single-condition run-to-failure fleet laid out
/// like FD001: 26 columns, sensors {1,5,6,10,16,18,19} and setting 3 constant,
/// the remaining sensors drifting with an exponential wear curve plus noise.
struct SyntheticFleetSpec {
  std::size_t train_engines = 100;
  std::size_t test_engines = 100;
  int min_life = 128;
  int max_life = 362;
  int min_test_length = 31;
  double noise_scale = 1.0;
  std::uint64_t seed = 7;
};

struct SyntheticFleet {
  std::vector<EngineTrajectory> train;
  std::vector<EngineTrajectory> test;
  RulLabelFile labels;
};

SyntheticFleet make_synthetic_fleet(const SyntheticFleetSpec& spec);

}  // namespace rul
