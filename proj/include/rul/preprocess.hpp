#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rul/dataset_io.hpp"
#include "rul/matrix.hpp"
#include "rul/rng.hpp"

namespace rul {

/// Which raw columns become model features. Feature order is always the kept
/// settings (ascending) followed by the kept sensors (ascending).
struct FeatureSelection {
  static std::set<int> default_dropped_sensors() { return {1, 5, 6, 10, 16, 18, 19}; }

  std::set<int> dropped_sensors = default_dropped_sensors();  // 1-based, 1..21
  std::set<int> dropped_settings;                             // 1-based, 1..3

  std::size_t feature_count() const;
  std::vector<std::string> feature_names() const;
  /// Row of selected raw values for one cycle.
  void extract(const CycleRecord& rec, std::span<double> out) const;
  void validate() const;

  /// Rebuilds a selection from names produced by feature_names().
  static FeatureSelection from_feature_names(const std::vector<std::string>& names);
};

/// Sensors (1-based) whose max-min over all training rows is <= tol.
std::set<int> detect_constant_sensors(const std::vector<EngineTrajectory>& trajectories,
                                      double tol = 1e-12);
std::set<int> detect_constant_settings(const std::vector<EngineTrajectory>& trajectories,
                                       double tol = 1e-12);

/// s0 = x0, st = alpha*xt + (1-alpha)*s(t-1).
std::vector<double> ewma_smooth(std::span<const double> series, double alpha);

/// Smooths every sensor channel of one engine in place of a copy; settings untouched.
EngineTrajectory smooth_sensors(const EngineTrajectory& trajectory, double alpha);

EngineTrajectory trim_head(const EngineTrajectory& trajectory, std::size_t n = 10);

struct ScalerParams {
  std::vector<std::string> feature_names;
  std::vector<double> mins;
  std::vector<double> maxs;

  std::size_t size() const { return mins.size(); }
  double transform(std::size_t feature, double x) const;  // clamped to [0,1]
  double inverse(std::size_t feature, double scaled) const;

  nlohmann::json to_json() const;
  static ScalerParams from_json(const nlohmann::json& j);
  /// FNV-1a over the canonical JSON text; identifies the scaler in checkpoints.
  std::uint64_t hash() const;

  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

ScalerParams fit_minmax(const std::vector<EngineTrajectory>& train,
                        const FeatureSelection& selection);

/// One engine after feature selection and scaling.
struct ScaledTrajectory {
  int engine_id = 0;
  std::vector<int> cycles;
  Matrix features;  // length x F, oldest first
};

ScaledTrajectory apply_minmax(const ScalerParams& scaler, const FeatureSelection& selection,
                              const EngineTrajectory& trajectory);

/// RUL(t) = (T_last - t) + terminal_rul, optionally capped.
std::vector<double> label_rul(const EngineTrajectory& trajectory, int terminal_rul,
                              std::optional<double> cap = std::nullopt);
std::vector<double> label_rul(std::span<const int> cycles, int terminal_rul,
                              std::optional<double> cap = std::nullopt);

struct SequenceSample {
  int engine_id = 0;
  int end_cycle = 0;
  Matrix window;  // window x F, oldest first
  double target_rul = 0.0;
};

struct RowSample {
  int engine_id = 0;
  int cycle = 0;
  std::vector<double> features;
  double target_rul = 0.0;
};

/// A scaled engine with per-cycle targets; what the bundle stores.
struct LabeledEngine {
  ScaledTrajectory trajectory;
  std::vector<double> rul;
};

std::vector<SequenceSample> make_windows(const LabeledEngine& engine, std::size_t window = 20);
std::vector<RowSample> make_rows(const LabeledEngine& engine);

/// Last window of an engine for inference. Engines shorter than the window
/// are front-padded by repeating their earliest row.
SequenceSample final_window(const LabeledEngine& engine, std::size_t window = 20);
RowSample final_row(const LabeledEngine& engine);

/// Trim length for a test engine: the configured trim, reduced so that at
/// least `window` rows remain when possible.
std::size_t effective_test_trim(std::size_t length, std::size_t trim, std::size_t window);

struct SplitSpec {
  std::uint64_t seed = 0;
  std::vector<int> train_ids;
  std::vector<int> validation_ids;

  nlohmann::json to_json() const;
  static SplitSpec from_json(const nlohmann::json& j);
};

SplitSpec split_by_engine(std::span<const int> engine_ids, std::size_t n_val, std::uint64_t seed);

struct PreprocessConfig {
  double alpha = 0.1;
  std::size_t trim = 10;
  std::size_t window = 20;
  std::size_t n_val = 20;
  std::uint64_t seed = 42;
  std::optional<double> rul_cap;
  double constant_tol = 1e-12;
  std::set<int> dropped_sensors = FeatureSelection::default_dropped_sensors();

  void validate() const;
  nlohmann::json to_json() const;
  std::uint64_t hash() const;
};

/// Training-side result of the full chain.
struct PreparedTraining {
  FeatureSelection selection;
  ScalerParams scaler;
  SplitSpec split;
  std::vector<LabeledEngine> train;
  std::vector<LabeledEngine> validation;
};

/// drop -> smooth -> trim -> fit+scale -> label -> split. Windowing is left to
/// the caller (make_windows / make_rows) since the two models consume
/// different sample shapes.
PreparedTraining prepare_training(const std::vector<EngineTrajectory>& train,
                                  const PreprocessConfig& config);

/// Same chain for test engines with the fitted scaler; terminal RUL from labels.
std::vector<LabeledEngine> prepare_test(const std::vector<EngineTrajectory>& test,
                                        const RulLabelFile& labels, const ScalerParams& scaler,
                                        const FeatureSelection& selection,
                                        const PreprocessConfig& config);

/// Same chain without labels (targets left at zero), for prediction only.
std::vector<LabeledEngine> prepare_unlabeled(const std::vector<EngineTrajectory>& engines,
                                             const ScalerParams& scaler,
                                             const FeatureSelection& selection,
                                             const PreprocessConfig& config);

std::size_t count_windows(const std::vector<LabeledEngine>& engines, std::size_t window);

}  // namespace rul
