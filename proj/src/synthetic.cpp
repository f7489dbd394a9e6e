#include "rul/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "rul/rng.hpp"

namespace rul {

namespace {

struct SensorModel {
  double base;
  double wear;   // shift at end of life
  double noise;  // standard deviation
};

// Rough FD001 magnitudes; zero wear and noise marks a constant channel.
constexpr SensorModel kSensors[kNumSensors] = {
    {518.67, 0.0, 0.0},   {642.2, 1.6, 0.45},    {1585.0, 20.0, 5.5}, {1398.0, 35.0, 8.0},
    {14.62, 0.0, 0.0},    {21.61, 0.0, 0.0},     {554.0, -3.0, 0.8},  {2388.05, 0.25, 0.06},
    {9050.0, 50.0, 18.0}, {1.3, 0.0, 0.0},       {47.3, 0.9, 0.24},   {522.0, -2.5, 0.7},
    {2388.05, 0.25, 0.07}, {8140.0, 40.0, 16.0}, {8.42, 0.1, 0.035},  {0.03, 0.0, 0.0},
    {392.0, 4.0, 1.4},    {2388.0, 0.0, 0.0},    {100.0, 0.0, 0.0},   {38.9, -0.6, 0.17},
    {23.33, -0.35, 0.1}};

double normal(SeededRng& rng) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - rng.next_unit();
  const double u2 = rng.next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

EngineTrajectory make_engine(int id, int life, int recorded, double noise_scale, SeededRng& rng) {
  EngineTrajectory e;
  e.engine_id = id;
  std::array<double, kNumSensors> offset{};
  for (std::size_t k = 0; k < kNumSensors; ++k)
    offset[k] = 0.5 * kSensors[k].noise * noise_scale * normal(rng);
  const double rate = rng.uniform(2.5, 4.0);
  const double norm = std::exp(rate) - 1.0;
  for (int t = 1; t <= recorded; ++t) {
    CycleRecord rec;
    rec.cycle = t;
    rec.settings = {rng.uniform(-0.0087, 0.0087), rng.uniform(-0.0006, 0.0006), 100.0};
    const double wear = (std::exp(rate * t / life) - 1.0) / norm;
    for (std::size_t k = 0; k < kNumSensors; ++k) {
      const auto& s = kSensors[k];
      if (s.noise == 0.0) {
        rec.sensors[k] = s.base;
      } else {
        rec.sensors[k] = s.base + offset[k] + s.wear * wear + s.noise * noise_scale * normal(rng);
      }
    }
    e.cycles.push_back(rec);
  }
  return e;
}

}  // namespace

SyntheticFleet make_synthetic_fleet(const SyntheticFleetSpec& spec) {
  SeededRng rng(spec.seed);
  SyntheticFleet fleet;
  const auto span = static_cast<std::uint64_t>(spec.max_life - spec.min_life + 1);
  for (std::size_t i = 0; i < spec.train_engines; ++i) {
    const int life = spec.min_life + static_cast<int>(rng.below(span));
    fleet.train.push_back(make_engine(static_cast<int>(i) + 1, life, life, spec.noise_scale, rng));
  }
  for (std::size_t i = 0; i < spec.test_engines; ++i) {
    const int life = spec.min_life + static_cast<int>(rng.below(span));
    const int max_cut = std::max(spec.min_test_length, life - 1);
    const int cut = spec.min_test_length +
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(max_cut - spec.min_test_length + 1)));
    fleet.test.push_back(make_engine(static_cast<int>(i) + 1, life, cut, spec.noise_scale, rng));
    fleet.labels.ruls.push_back(std::max(0, life - cut));
  }
  return fleet;
}

}  // namespace rul
