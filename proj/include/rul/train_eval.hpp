#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rul/adam.hpp"
#include "rul/lstm.hpp"
#include "rul/mlp.hpp"
#include "rul/preprocess.hpp"

namespace rul {

enum class ModelKind { mlp, lstm };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& s);

/// Training hyperparameters. Defaults follow the published training table:
/// 35 epochs, lr 0.001, 64 samples per batch, 20-step windows.
struct TrainConfig {
  ModelKind kind = ModelKind::lstm;
  std::size_t epochs = 35;
  std::size_t batch_size = 64;
  double lr = 0.001;
  std::size_t window = 20;
  std::uint64_t seed = 42;
  double alpha = 0.1;
  std::optional<double> rul_cap;
  std::optional<double> grad_clip;  // global L2 max-norm
  std::vector<std::size_t> mlp_hidden{64, 32};
  std::size_t lstm_hidden = 64;

  void validate() const;
  nlohmann::json to_json() const;
  std::uint64_t hash() const;
};

using Model = std::variant<MlpParams, LstmParams>;

ModelKind kind_of(const Model& model);
const TensorSet& tensors_of(const Model& model);
TensorSet& tensors_of(Model& model);
Model init_model(const TrainConfig& config, std::size_t features, SeededRng& rng);

/// Samples in the shape the chosen model consumes.
struct TrainingSet {
  ModelKind kind = ModelKind::lstm;
  std::vector<SequenceSample> sequences;  // lstm
  std::vector<RowSample> rows;            // mlp

  std::size_t size() const;
  int engine_id(std::size_t i) const;
  double target(std::size_t i) const;
};

TrainingSet build_training_set(ModelKind kind, const std::vector<LabeledEngine>& engines,
                               std::size_t window);

/// Predictions for a subset of samples, in the order of `indices`.
std::vector<double> predict_batch(const Model& model, const TrainingSet& set,
                                  std::span<const std::size_t> indices);

/// Forward + MSE + backward for one batch.
struct BatchGradient {
  double loss = 0.0;
  GradientSet grads;
};
BatchGradient batch_gradient(const Model& model, const TrainingSet& set,
                             std::span<const std::size_t> indices);

/// MSE of the model over the whole set, evaluated in chunks.
double dataset_mse(const Model& model, const TrainingSet& set);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;
  std::optional<double> val_mse;  // absent when there are no validation samples
  double seconds = 0.0;           // wall clock; not written to history.csv
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  /// "epoch,train_mse,val_mse" with %.17g doubles.
  std::string to_csv() const;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  Model model;
  AdamState optimizer;
  TrainHistory history;
  std::set<int> gradient_engine_ids;  // every engine that fed a gradient step
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Seeded shuffle each epoch, consecutive chunks of batch_size (final partial
/// batch kept), Adam update per chunk, validation MSE after each epoch.
TrainResult train(const TrainConfig& config, const TrainingSet& train_set,
                  const TrainingSet& validation_set, const EpochCallback& on_epoch = {});

struct EvalRow {
  int engine_id = 0;
  double true_rul = 0.0;
  double predicted_rul = 0.0;
  double predicted_rul_clamped = 0.0;  // max(0, predicted)
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mse = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string checkpoint_hash;
  std::string model;

  nlohmann::json to_json() const;
  /// "engine_id,true_rul,predicted_rul,predicted_rul_clamped"
  std::string predictions_csv() const;
};

using EnginePredictor = std::function<double(const LabeledEngine&)>;

/// One prediction per engine; MSE over per-engine errors against the label at
/// the last recorded cycle.
EvalReport evaluate_engines(const std::vector<LabeledEngine>& test, const EnginePredictor& predict);

/// Final window (lstm) or final row (mlp) predictor for a trained model.
EnginePredictor model_predictor(const Model& model, std::size_t window);

/// Everything needed to resume or evaluate a run.
struct Checkpoint {
  Model model;
  AdamState optimizer;
  TrainConfig config;
  std::vector<std::string> feature_order;
  std::string scaler_hash;
  std::string preprocess_hash;

  nlohmann::json to_json() const;
  static Checkpoint from_json(const nlohmann::json& j);
};

class StaleScalerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs the test-side preprocessing with `scaler` and evaluates. Refuses to
/// run when the checkpoint was trained against a different scaler.
EvalReport evaluate(const Checkpoint& checkpoint, const std::vector<EngineTrajectory>& test,
                    const RulLabelFile& labels, const ScalerParams& scaler,
                    const PreprocessConfig& preprocess);

struct GradCheckResult {
  std::size_t trials = 0;
  std::size_t entries_checked = 0;
  double max_rel_error = 0.0;
  std::string worst_tensor;
};

/// Hook applied to analytic gradients before comparison; lets tests inject faults.
using GradientTamper = std::function<void(GradientSet&)>;

/// Random small models (F<=5, H<=4, window<=5, batch<=3) compared against
/// central finite differences (eps=1e-5); relative error uses max(1,|g|).
GradCheckResult gradient_check_suite(ModelKind kind, std::size_t trials, std::uint64_t seed,
                                     const GradientTamper& tamper = {});

}  // namespace rul
