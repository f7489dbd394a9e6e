#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rul/preprocess.hpp"
#include "rul/train_eval.hpp"

namespace rul {

/// Everything one run needs: dataset paths, preprocessing and training knobs,
/// and the output directory. Loaded from a JSON config; unknown keys rejected.
struct RunConfig {
  std::filesystem::path train_file;
  std::filesystem::path test_file;
  std::filesystem::path rul_file;
  std::filesystem::path out_dir = "runs/default";

  TrainConfig train;
  std::size_t trim = 10;
  std::size_t n_val = 20;
  double constant_tol = 1e-12;
  std::set<int> dropped_sensors = FeatureSelection::default_dropped_sensors();

  /// Points the three dataset paths at <dir>/{train,test,RUL}_FD001.txt.
  void use_data_dir(const std::filesystem::path& dir);

  PreprocessConfig preprocess() const;
  void validate() const;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
};

std::vector<EngineTrajectory> load_trajectories(const std::filesystem::path& path);
RulLabelFile load_labels(const std::filesystem::path& path);

struct PreprocessSummary {
  DatasetStats stats;
  std::size_t feature_count = 0;
  std::vector<std::string> feature_order;
  std::set<int> constant_sensors;
  std::size_t train_sequences = 0;       // windows over all training-file engines
  std::size_t fit_sequences = 0;         // windows over the training split
  std::size_t validation_sequences = 0;  // windows over the validation split
  std::size_t train_rows = 0;
  std::string preprocess_hash;
  std::string scaler_hash;
};

/// Artifact names inside RunConfig::out_dir.
struct ArtifactPaths {
  std::filesystem::path root;
  std::filesystem::path bundle() const { return root / "bundle.jsonl"; }
  std::filesystem::path scaler() const { return root / "scaler.json"; }
  std::filesystem::path split() const { return root / "split.json"; }
  std::filesystem::path summary() const { return root / "dataset_summary.json"; }
  std::filesystem::path model_dir(ModelKind k) const { return root / to_string(k); }
  std::filesystem::path checkpoint(ModelKind k) const { return model_dir(k) / "checkpoint.json"; }
  std::filesystem::path history(ModelKind k) const { return model_dir(k) / "history.csv"; }
  std::filesystem::path report(ModelKind k) const { return model_dir(k) / "eval_report.json"; }
  std::filesystem::path predictions(ModelKind k) const { return model_dir(k) / "predictions.csv"; }
};

/// Parses, preprocesses and writes bundle.jsonl, scaler.json, split.json and
/// dataset_summary.json. Nothing is written unless every stage succeeds.
PreprocessSummary run_preprocess(const RunConfig& config);

/// Reads back the bundle written by run_preprocess.
struct Bundle {
  std::string preprocess_hash;
  ScalerParams scaler;
  SplitSpec split;
  std::vector<LabeledEngine> train;
  std::vector<LabeledEngine> validation;
};
Bundle load_bundle(const ArtifactPaths& paths);

struct TrainRunResult {
  TrainResult result;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
};

/// Trains on the bundle and writes <model>/checkpoint.json and history.csv.
TrainRunResult run_train(const RunConfig& config, const EpochCallback& on_epoch = {});

/// Evaluates <model>/checkpoint.json on the test files; writes
/// eval_report.json and predictions.csv.
EvalReport run_evaluate(const RunConfig& config);

struct EnginePrediction {
  int engine_id = 0;
  int last_cycle = 0;
  double predicted_rul = 0.0;
};

/// Predicts RUL at the last recorded cycle of every engine in `input`.
std::vector<EnginePrediction> run_predict(const RunConfig& config,
                                          const std::filesystem::path& input);
std::string predictions_to_csv(const std::vector<EnginePrediction>& predictions);

struct CheckOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckOutcome> checks;
  double max_grad_rel_error = 0.0;
  bool all_passed() const;
};

struct VerifyOptions {
  std::size_t gradcheck_trials = 100;
  std::uint64_t seed = 42;
  GradientTamper tamper;  // fault injection for tests
};

/// Gradient checks for both models plus preprocessing invariants on a
/// synthetic fleet (or on `engines` when given).
VerifyReport run_verify(const VerifyOptions& options,
                        const std::vector<EngineTrajectory>* engines = nullptr);

}  // namespace rul
