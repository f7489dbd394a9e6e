#include "rul/train_eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "rul/artifacts.hpp"
#include "rul/loss.hpp"

namespace rul {

std::string to_string(ModelKind kind) { return kind == ModelKind::mlp ? "mlp" : "lstm"; }

ModelKind parse_model_kind(const std::string& s) {
  if (s == "mlp") return ModelKind::mlp;
  if (s == "lstm") return ModelKind::lstm;
  throw ConfigError("unknown model kind '" + s + "' (expected mlp or lstm)");
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (window == 0) throw ConfigError("window must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (rul_cap && !(*rul_cap > 0.0)) throw ConfigError("rul_cap must be positive");
  if (grad_clip && !(*grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
  if (lstm_hidden == 0) throw ConfigError("lstm_hidden must be positive");
  for (std::size_t h : mlp_hidden)
    if (h == 0) throw ConfigError("mlp_hidden sizes must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j = {{"model", to_string(kind)}, {"epochs", epochs},
                      {"batch_size", batch_size}, {"lr", lr},
                      {"window", window},         {"seed", seed},
                      {"alpha", alpha},           {"mlp_hidden", mlp_hidden},
                      {"lstm_hidden", lstm_hidden}};
  j["rul_cap"] = rul_cap ? nlohmann::json(*rul_cap) : nlohmann::json(nullptr);
  j["grad_clip"] = grad_clip ? nlohmann::json(*grad_clip) : nlohmann::json(nullptr);
  return j;
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(to_json().dump()); }

ModelKind kind_of(const Model& model) {
  return std::holds_alternative<MlpParams>(model) ? ModelKind::mlp : ModelKind::lstm;
}

const TensorSet& tensors_of(const Model& model) {
  return std::visit([](const auto& p) -> const TensorSet& { return p.tensors; }, model);
}

TensorSet& tensors_of(Model& model) {
  return std::visit([](auto& p) -> TensorSet& { return p.tensors; }, model);
}

Model init_model(const TrainConfig& config, std::size_t features, SeededRng& rng) {
  if (config.kind == ModelKind::mlp) return init_mlp({features, config.mlp_hidden}, rng);
  return init_lstm({features, config.lstm_hidden}, rng);
}

std::size_t TrainingSet::size() const {
  return kind == ModelKind::lstm ? sequences.size() : rows.size();
}

int TrainingSet::engine_id(std::size_t i) const {
  return kind == ModelKind::lstm ? sequences[i].engine_id : rows[i].engine_id;
}

double TrainingSet::target(std::size_t i) const {
  return kind == ModelKind::lstm ? sequences[i].target_rul : rows[i].target_rul;
}

TrainingSet build_training_set(ModelKind kind, const std::vector<LabeledEngine>& engines,
                               std::size_t window) {
  TrainingSet set;
  set.kind = kind;
  for (const auto& engine : engines) {
    if (kind == ModelKind::lstm) {
      auto w = make_windows(engine, window);
      std::move(w.begin(), w.end(), std::back_inserter(set.sequences));
    } else {
      auto r = make_rows(engine);
      std::move(r.begin(), r.end(), std::back_inserter(set.rows));
    }
  }
  return set;
}

namespace {

void require_kind(const Model& model, const TrainingSet& set) {
  if (kind_of(model) != set.kind)
    throw ConfigError("model is " + to_string(kind_of(model)) + " but samples are for " +
                      to_string(set.kind));
}

Matrix gather_rows(const TrainingSet& set, std::span<const std::size_t> indices) {
  const std::size_t f = set.rows.at(indices.front()).features.size();
  Matrix x(indices.size(), f);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& feats = set.rows[indices[b]].features;
    std::copy(feats.begin(), feats.end(), x.row(b).begin());
  }
  return x;
}

std::vector<Matrix> gather_windows(const TrainingSet& set, std::span<const std::size_t> indices) {
  std::vector<const Matrix*> ptrs;
  ptrs.reserve(indices.size());
  for (std::size_t i : indices) ptrs.push_back(&set.sequences.at(i).window);
  return time_major(ptrs);
}

}  // namespace

std::vector<double> predict_batch(const Model& model, const TrainingSet& set,
                                  std::span<const std::size_t> indices) {
  require_kind(model, set);
  if (indices.empty()) return {};
  if (const auto* mlp = std::get_if<MlpParams>(&model))
    return mlp_forward(*mlp, gather_rows(set, indices)).predictions;
  return lstm_sequence_forward(std::get<LstmParams>(model), gather_windows(set, indices))
      .predictions;
}

BatchGradient batch_gradient(const Model& model, const TrainingSet& set,
                             std::span<const std::size_t> indices) {
  require_kind(model, set);
  std::vector<double> targets;
  targets.reserve(indices.size());
  for (std::size_t i : indices) targets.push_back(set.target(i));

  BatchGradient out;
  if (const auto* mlp = std::get_if<MlpParams>(&model)) {
    auto fwd = mlp_forward(*mlp, gather_rows(set, indices));
    auto loss = mse_loss(fwd.predictions, targets);
    out.loss = loss.loss;
    out.grads = mlp_backward(*mlp, fwd.cache, loss.grad);
  } else {
    const auto& lstm = std::get<LstmParams>(model);
    auto fwd = lstm_sequence_forward(lstm, gather_windows(set, indices));
    auto loss = mse_loss(fwd.predictions, targets);
    out.loss = loss.loss;
    out.grads = lstm_backward(lstm, fwd.cache, loss.grad);
  }
  return out;
}

double dataset_mse(const Model& model, const TrainingSet& set) {
  constexpr std::size_t kChunk = 512;
  const std::size_t n = set.size();
  if (n == 0) throw ConfigError("dataset_mse: empty dataset");
  double sum = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += kChunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(n, start + kChunk); ++i) idx.push_back(i);
    const auto pred = predict_batch(model, set, idx);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const double e = pred[b] - set.target(idx[b]);
      sum += e * e;
    }
  }
  return sum / static_cast<double>(n);
}

std::string TrainHistory::to_csv() const {
  std::string out = "epoch,train_mse,val_mse\n";
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_mse) + ",";
    if (e.val_mse) out += format_double(*e.val_mse);
    out += "\n";
  }
  return out;
}

TrainResult train(const TrainConfig& config, const TrainingSet& train_set,
                  const TrainingSet& validation_set, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.size() == 0) throw ConfigError("train: empty training set");
  if (train_set.kind != config.kind || validation_set.kind != config.kind)
    throw ConfigError("train: sample kind does not match model kind " + to_string(config.kind));

  const std::size_t features = config.kind == ModelKind::lstm
                                   ? train_set.sequences.front().window.cols()
                                   : train_set.rows.front().features.size();
  const SeededRng root(config.seed);
  SeededRng init_rng = root.derive("init");
  SeededRng shuffle_rng = root.derive("shuffle");

  TrainResult result{init_model(config, features, init_rng), {}, {}, {}};
  AdamHyperparams hyper;
  hyper.lr = config.lr;
  result.optimizer = adam_init(tensors_of(result.model), hyper);

  const std::size_t n = train_set.size();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const auto order = rng_shuffle(shuffle_rng, n);
    double weighted_loss = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_no) {
      const std::span<const std::size_t> batch(order.data() + start,
                                               std::min(config.batch_size, n - start));
      auto bg = batch_gradient(result.model, train_set, batch);
      if (!std::isfinite(bg.loss)) {
        throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batch_no));
      }
      if (config.grad_clip) {
        const double norm = std::sqrt(bg.grads.squared_norm());
        if (norm > *config.grad_clip) bg.grads.scale(*config.grad_clip / norm);
      }
      for (std::size_t i : batch) result.gradient_engine_ids.insert(train_set.engine_id(i));
      try {
        adam_step(result.optimizer, tensors_of(result.model), bg.grads);
      } catch (const NonFiniteError& e) {
        throw TrainingDiverged(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batch_no));
      }
      weighted_loss += bg.loss * static_cast<double>(batch.size());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = weighted_loss / static_cast<double>(n);
    if (validation_set.size() > 0) {
      rec.val_mse = dataset_mse(result.model, validation_set);
      if (!std::isfinite(*rec.val_mse))
        throw TrainingDiverged("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json engines = nlohmann::json::array();
  for (const auto& r : rows) {
    engines.push_back({{"engine_id", r.engine_id},
                       {"true_rul", r.true_rul},
                       {"predicted_rul", r.predicted_rul},
                       {"predicted_rul_clamped", r.predicted_rul_clamped}});
  }
  return {{"model", model},
          {"test_mse", mse},
          {"engine_count", rows.size()},
          {"seed", seed},
          {"config_hash", config_hash},
          {"checkpoint_hash", checkpoint_hash},
          {"engines", engines}};
}

std::string EvalReport::predictions_csv() const {
  std::string out = "engine_id,true_rul,predicted_rul,predicted_rul_clamped\n";
  for (const auto& r : rows) {
    out += std::to_string(r.engine_id) + "," + format_double(r.true_rul) + "," +
           format_double(r.predicted_rul) + "," + format_double(r.predicted_rul_clamped) + "\n";
  }
  return out;
}

EvalReport evaluate_engines(const std::vector<LabeledEngine>& test, const EnginePredictor& predict) {
  if (test.empty()) throw ConfigError("evaluate: no test engines");
  EvalReport report;
  double sum = 0.0;
  for (const auto& engine : test) {
    EvalRow row;
    row.engine_id = engine.trajectory.engine_id;
    row.true_rul = engine.rul.back();
    row.predicted_rul = predict(engine);
    row.predicted_rul_clamped = std::max(0.0, row.predicted_rul);
    const double e = row.predicted_rul - row.true_rul;
    sum += e * e;
    report.rows.push_back(row);
  }
  report.mse = sum / static_cast<double>(report.rows.size());
  return report;
}

EnginePredictor model_predictor(const Model& model, std::size_t window) {
  if (const auto* mlp = std::get_if<MlpParams>(&model)) {
    return [mlp](const LabeledEngine& e) { return mlp_predict(*mlp, final_row(e).features); };
  }
  const auto* lstm = &std::get<LstmParams>(model);
  return [lstm, window](const LabeledEngine& e) {
    return lstm_predict(*lstm, final_window(e, window).window);
  };
}

nlohmann::json Checkpoint::to_json() const {
  nlohmann::json arch = std::visit([](const auto& p) { return p.spec.to_json(); }, model);
  return {{"format", "rul-checkpoint/1"},
          {"model", to_string(kind_of(model))},
          {"architecture", arch},
          {"feature_order", feature_order},
          {"scaler_hash", scaler_hash},
          {"preprocess_hash", preprocess_hash},
          {"config", config.to_json()},
          {"config_hash", hex64(config.hash())},
          {"tensors", tensors_of(model).to_json()},
          {"optimizer", optimizer.to_json()}};
}

namespace {

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.kind = parse_model_kind(j.at("model").get<std::string>());
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.lr = j.at("lr").get<double>();
  c.window = j.at("window").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.alpha = j.at("alpha").get<double>();
  c.mlp_hidden = j.at("mlp_hidden").get<std::vector<std::size_t>>();
  c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
  if (!j.at("rul_cap").is_null()) c.rul_cap = j.at("rul_cap").get<double>();
  if (!j.at("grad_clip").is_null()) c.grad_clip = j.at("grad_clip").get<double>();
  c.validate();
  return c;
}

}  // namespace

Checkpoint Checkpoint::from_json(const nlohmann::json& j) {
  if (j.at("format") != "rul-checkpoint/1")
    throw ConfigError("unsupported checkpoint format " + j.at("format").dump());
  Checkpoint c;
  c.config = config_from_json(j.at("config"));
  c.feature_order = j.at("feature_order").get<std::vector<std::string>>();
  c.scaler_hash = j.at("scaler_hash").get<std::string>();
  c.preprocess_hash = j.at("preprocess_hash").get<std::string>();
  auto tensors = TensorSet::from_json(j.at("tensors"));
  const auto kind = parse_model_kind(j.at("model").get<std::string>());
  if (kind == ModelKind::mlp) {
    c.model = make_mlp(MlpSpec::from_json(j.at("architecture")), std::move(tensors));
  } else {
    c.model = make_lstm(LstmSpec::from_json(j.at("architecture")), std::move(tensors));
  }
  c.optimizer = AdamState::from_json(j.at("optimizer"));
  tensors_of(c.model).require_congruent(c.optimizer.m, "checkpoint optimizer state");
  return c;
}

EvalReport evaluate(const Checkpoint& checkpoint, const std::vector<EngineTrajectory>& test,
                    const RulLabelFile& labels, const ScalerParams& scaler,
                    const PreprocessConfig& preprocess) {
  if (hex64(scaler.hash()) != checkpoint.scaler_hash) {
    throw StaleScalerError("scaler hash " + hex64(scaler.hash()) +
                           " does not match the checkpoint's " + checkpoint.scaler_hash +
                           "; the model was trained on differently scaled features");
  }
  const auto selection = FeatureSelection::from_feature_names(scaler.feature_names);
  const auto engines = prepare_test(test, labels, scaler, selection, preprocess);
  auto report = evaluate_engines(engines, model_predictor(checkpoint.model, preprocess.window));
  report.model = to_string(kind_of(checkpoint.model));
  report.seed = checkpoint.config.seed;
  report.config_hash = hex64(checkpoint.config.hash());
  return report;
}

namespace {

double loss_at(const Model& model, const TrainingSet& set, std::span<const std::size_t> idx) {
  const auto pred = predict_batch(model, set, idx);
  std::vector<double> targets;
  for (std::size_t i : idx) targets.push_back(set.target(i));
  return mse_loss(pred, targets).loss;
}

}  // namespace

GradCheckResult gradient_check_suite(ModelKind kind, std::size_t trials, std::uint64_t seed,
                                     const GradientTamper& tamper) {
  constexpr double kEps = 1e-5;
  GradCheckResult result;
  SeededRng rng = SeededRng(seed).derive("gradcheck");
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t features = 1 + rng.below(5);
    const std::size_t hidden = 1 + rng.below(4);
    const std::size_t window = 1 + rng.below(5);
    const std::size_t batch = 1 + rng.below(3);

    TrainConfig cfg;
    cfg.kind = kind;
    cfg.lstm_hidden = hidden;
    cfg.mlp_hidden = {hidden, 1 + static_cast<std::size_t>(rng.below(4))};
    Model model = init_model(cfg, features, rng);
    // Spread parameters beyond the init range so the nonlinearities are exercised.
    for (auto& t : tensors_of(model).tensors)
      for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);

    TrainingSet set;
    set.kind = kind;
    for (std::size_t b = 0; b < batch; ++b) {
      if (kind == ModelKind::lstm) {
        set.sequences.push_back(
            {0, 0, rng_uniform(rng, -1.0, 1.0, window, features), rng.uniform(-2.0, 2.0)});
      } else {
        const auto x = rng_uniform(rng, -1.0, 1.0, 1, features);
        set.rows.push_back({0, 0, x.data(), rng.uniform(-2.0, 2.0)});
      }
    }
    std::vector<std::size_t> idx(batch);
    for (std::size_t b = 0; b < batch; ++b) idx[b] = b;

    auto analytic = batch_gradient(model, set, idx).grads;
    if (tamper) tamper(analytic);

    auto& params = tensors_of(model);
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < params[k].size(); ++i) {
        double& p = params[k].data()[i];
        const double saved = p;
        p = saved + kEps;
        const double up = loss_at(model, set, idx);
        p = saved - kEps;
        const double down = loss_at(model, set, idx);
        p = saved;
        const double numeric = (up - down) / (2.0 * kEps);
        const double g = analytic[k].data()[i];
        const double rel = std::abs(g - numeric) / std::max(1.0, std::abs(g));
        if (rel > result.max_rel_error || !std::isfinite(rel)) {
          result.max_rel_error = std::isfinite(rel) ? rel : std::numeric_limits<double>::infinity();
          result.worst_tensor = params.names[k];
        }
        ++result.entries_checked;
      }
    }
    ++result.trials;
  }
  return result;
}

}  // namespace rul
