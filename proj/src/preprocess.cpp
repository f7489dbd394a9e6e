#include "rul/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rul {

namespace {

std::string setting_name(int k) { return "setting_" + std::to_string(k); }
std::string sensor_name(int k) { return "sensor_" + std::to_string(k); }

template <typename Get>
std::set<int> detect_constant(const std::vector<EngineTrajectory>& trajectories, int count,
                              double tol, Get get) {
  std::vector<double> lo(count, std::numeric_limits<double>::infinity());
  std::vector<double> hi(count, -std::numeric_limits<double>::infinity());
  for (const auto& engine : trajectories) {
    for (const auto& rec : engine.cycles) {
      for (int k = 0; k < count; ++k) {
        const double v = get(rec, k);
        lo[k] = std::min(lo[k], v);
        hi[k] = std::max(hi[k], v);
      }
    }
  }
  std::set<int> constant;
  for (int k = 0; k < count; ++k) {
    if (hi[k] - lo[k] <= tol) constant.insert(k + 1);
  }
  return constant;
}

}  // namespace

std::size_t FeatureSelection::feature_count() const {
  return (kNumSettings - dropped_settings.size()) + (kNumSensors - dropped_sensors.size());
}

std::vector<std::string> FeatureSelection::feature_names() const {
  std::vector<std::string> names;
  for (int k = 1; k <= static_cast<int>(kNumSettings); ++k)
    if (!dropped_settings.contains(k)) names.push_back(setting_name(k));
  for (int k = 1; k <= static_cast<int>(kNumSensors); ++k)
    if (!dropped_sensors.contains(k)) names.push_back(sensor_name(k));
  return names;
}

void FeatureSelection::extract(const CycleRecord& rec, std::span<double> out) const {
  std::size_t j = 0;
  for (std::size_t k = 0; k < kNumSettings; ++k)
    if (!dropped_settings.contains(static_cast<int>(k) + 1)) out[j++] = rec.settings[k];
  for (std::size_t k = 0; k < kNumSensors; ++k)
    if (!dropped_sensors.contains(static_cast<int>(k) + 1)) out[j++] = rec.sensors[k];
}

void FeatureSelection::validate() const {
  for (int k : dropped_sensors)
    if (k < 1 || k > static_cast<int>(kNumSensors))
      throw ConfigError("dropped sensor index out of range 1..21: " + std::to_string(k));
  for (int k : dropped_settings)
    if (k < 1 || k > static_cast<int>(kNumSettings))
      throw ConfigError("dropped setting index out of range 1..3: " + std::to_string(k));
  if (feature_count() == 0) throw ConfigError("feature selection keeps no features");
}

FeatureSelection FeatureSelection::from_feature_names(const std::vector<std::string>& names) {
  FeatureSelection sel;
  sel.dropped_sensors.clear();
  sel.dropped_settings.clear();
  for (int k = 1; k <= static_cast<int>(kNumSettings); ++k) sel.dropped_settings.insert(k);
  for (int k = 1; k <= static_cast<int>(kNumSensors); ++k) sel.dropped_sensors.insert(k);
  for (const auto& name : names) {
    bool found = false;
    for (int k = 1; k <= static_cast<int>(kNumSettings) && !found; ++k)
      if (name == setting_name(k)) found = sel.dropped_settings.erase(k) == 1;
    for (int k = 1; k <= static_cast<int>(kNumSensors) && !found; ++k)
      if (name == sensor_name(k)) found = sel.dropped_sensors.erase(k) == 1;
    if (!found) throw ConfigError("unknown or duplicate feature name '" + name + "'");
  }
  if (sel.feature_names() != names)
    throw ConfigError("feature order does not follow settings-then-sensors ascending order");
  return sel;
}

std::set<int> detect_constant_sensors(const std::vector<EngineTrajectory>& trajectories,
                                      double tol) {
  return detect_constant(trajectories, static_cast<int>(kNumSensors), tol,
                         [](const CycleRecord& r, int k) { return r.sensors[k]; });
}

std::set<int> detect_constant_settings(const std::vector<EngineTrajectory>& trajectories,
                                       double tol) {
  return detect_constant(trajectories, static_cast<int>(kNumSettings), tol,
                         [](const CycleRecord& r, int k) { return r.settings[k]; });
}

std::vector<double> ewma_smooth(std::span<const double> series, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ConfigError("ewma alpha must lie in (0, 1], got " + std::to_string(alpha));
  std::vector<double> out(series.size());
  if (series.empty()) return out;
  out[0] = series[0];
  // Same recurrence as alpha*x + (1-alpha)*s, arranged so a constant input and
  // alpha=1 both reproduce x exactly.
  for (std::size_t t = 1; t < series.size(); ++t)
    out[t] = series[t] + (1.0 - alpha) * (out[t - 1] - series[t]);
  return out;
}

EngineTrajectory smooth_sensors(const EngineTrajectory& trajectory, double alpha) {
  EngineTrajectory out = trajectory;
  std::vector<double> channel(trajectory.length());
  for (std::size_t k = 0; k < kNumSensors; ++k) {
    for (std::size_t t = 0; t < channel.size(); ++t) channel[t] = trajectory.cycles[t].sensors[k];
    const auto smoothed = ewma_smooth(channel, alpha);
    for (std::size_t t = 0; t < channel.size(); ++t) out.cycles[t].sensors[k] = smoothed[t];
  }
  return out;
}

EngineTrajectory trim_head(const EngineTrajectory& trajectory, std::size_t n) {
  if (trajectory.length() <= n) {
    throw ValidationError("engine " + std::to_string(trajectory.engine_id) + " has " +
                          std::to_string(trajectory.length()) + " cycles; cannot trim " +
                          std::to_string(n));
  }
  EngineTrajectory out;
  out.engine_id = trajectory.engine_id;
  out.cycles.assign(trajectory.cycles.begin() + static_cast<std::ptrdiff_t>(n),
                    trajectory.cycles.end());
  return out;
}

double ScalerParams::transform(std::size_t feature, double x) const {
  const double scaled = (x - mins[feature]) / (maxs[feature] - mins[feature]);
  return std::clamp(scaled, 0.0, 1.0);
}

double ScalerParams::inverse(std::size_t feature, double scaled) const {
  return mins[feature] + scaled * (maxs[feature] - mins[feature]);
}

nlohmann::json ScalerParams::to_json() const {
  return {{"feature_order", feature_names}, {"mins", mins}, {"maxs", maxs}};
}

ScalerParams ScalerParams::from_json(const nlohmann::json& j) {
  ScalerParams s;
  s.feature_names = j.at("feature_order").get<std::vector<std::string>>();
  s.mins = j.at("mins").get<std::vector<double>>();
  s.maxs = j.at("maxs").get<std::vector<double>>();
  if (s.mins.size() != s.feature_names.size() || s.maxs.size() != s.feature_names.size())
    throw ValidationError("scaler: mins/maxs length does not match feature_order");
  for (std::size_t k = 0; k < s.size(); ++k)
    if (!(s.mins[k] < s.maxs[k]))
      throw ValidationError("scaler: feature '" + s.feature_names[k] + "' has min >= max");
  return s;
}

std::uint64_t ScalerParams::hash() const { return fnv1a64(to_json().dump()); }

ScalerParams fit_minmax(const std::vector<EngineTrajectory>& train,
                        const FeatureSelection& selection) {
  selection.validate();
  const std::size_t f = selection.feature_count();
  ScalerParams s;
  s.feature_names = selection.feature_names();
  s.mins.assign(f, std::numeric_limits<double>::infinity());
  s.maxs.assign(f, -std::numeric_limits<double>::infinity());
  std::vector<double> row(f);
  std::size_t rows = 0;
  for (const auto& engine : train) {
    for (const auto& rec : engine.cycles) {
      selection.extract(rec, row);
      for (std::size_t k = 0; k < f; ++k) {
        s.mins[k] = std::min(s.mins[k], row[k]);
        s.maxs[k] = std::max(s.maxs[k], row[k]);
      }
      ++rows;
    }
  }
  if (rows == 0) throw ValidationError("fit_minmax: no training rows");
  for (std::size_t k = 0; k < f; ++k) {
    if (!(s.maxs[k] > s.mins[k])) {
      throw ValidationError("fit_minmax: feature '" + s.feature_names[k] +
                            "' is constant on the training data; add it to the drop set");
    }
  }
  return s;
}

ScaledTrajectory apply_minmax(const ScalerParams& scaler, const FeatureSelection& selection,
                              const EngineTrajectory& trajectory) {
  if (selection.feature_names() != scaler.feature_names)
    throw ValidationError("apply_minmax: feature order differs from the fitted scaler");
  const std::size_t f = scaler.size();
  ScaledTrajectory out;
  out.engine_id = trajectory.engine_id;
  out.features = Matrix(trajectory.length(), f);
  out.cycles.reserve(trajectory.length());
  for (std::size_t t = 0; t < trajectory.length(); ++t) {
    const auto& rec = trajectory.cycles[t];
    out.cycles.push_back(rec.cycle);
    auto row = out.features.row(t);
    selection.extract(rec, row);
    for (std::size_t k = 0; k < f; ++k) row[k] = scaler.transform(k, row[k]);
  }
  return out;
}

std::vector<double> label_rul(std::span<const int> cycles, int terminal_rul,
                              std::optional<double> cap) {
  std::vector<double> rul(cycles.size());
  if (cycles.empty()) return rul;
  const int last = cycles.back();
  for (std::size_t t = 0; t < cycles.size(); ++t) {
    double v = static_cast<double>(last - cycles[t] + terminal_rul);
    if (cap) v = std::min(v, *cap);
    rul[t] = v;
  }
  return rul;
}

std::vector<double> label_rul(const EngineTrajectory& trajectory, int terminal_rul,
                              std::optional<double> cap) {
  std::vector<int> cycles;
  cycles.reserve(trajectory.length());
  for (const auto& rec : trajectory.cycles) cycles.push_back(rec.cycle);
  return label_rul(cycles, terminal_rul, cap);
}

std::vector<SequenceSample> make_windows(const LabeledEngine& engine, std::size_t window) {
  const auto& traj = engine.trajectory;
  const std::size_t length = traj.features.rows();
  if (window == 0) throw ConfigError("window length must be positive");
  if (length < window) {
    throw ValidationError("engine " + std::to_string(traj.engine_id) + " has " +
                          std::to_string(length) + " rows, shorter than window " +
                          std::to_string(window));
  }
  const std::size_t f = traj.features.cols();
  std::vector<SequenceSample> samples;
  samples.reserve(length - window + 1);
  for (std::size_t end = window - 1; end < length; ++end) {
    SequenceSample s;
    s.engine_id = traj.engine_id;
    s.end_cycle = traj.cycles[end];
    s.target_rul = engine.rul[end];
    s.window = Matrix(window, f);
    const std::size_t start = end + 1 - window;
    std::copy_n(traj.features.row(start).data(), window * f, s.window.data().data());
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<RowSample> make_rows(const LabeledEngine& engine) {
  const auto& traj = engine.trajectory;
  std::vector<RowSample> rows;
  rows.reserve(traj.features.rows());
  for (std::size_t t = 0; t < traj.features.rows(); ++t) {
    const auto r = traj.features.row(t);
    rows.push_back({traj.engine_id, traj.cycles[t], {r.begin(), r.end()}, engine.rul[t]});
  }
  return rows;
}

SequenceSample final_window(const LabeledEngine& engine, std::size_t window) {
  const auto& traj = engine.trajectory;
  const std::size_t length = traj.features.rows();
  if (length == 0) throw ValidationError("engine " + std::to_string(traj.engine_id) + " is empty");
  if (window == 0) throw ConfigError("window length must be positive");
  const std::size_t f = traj.features.cols();
  SequenceSample s;
  s.engine_id = traj.engine_id;
  s.end_cycle = traj.cycles.back();
  s.target_rul = engine.rul.back();
  s.window = Matrix(window, f);
  const std::size_t pad = window > length ? window - length : 0;
  const std::size_t start = length + pad - window;
  for (std::size_t t = 0; t < window; ++t) {
    const std::size_t src = t < pad ? 0 : start + (t - pad);
    std::copy_n(traj.features.row(src).data(), f, s.window.row(t).data());
  }
  return s;
}

RowSample final_row(const LabeledEngine& engine) {
  const auto& traj = engine.trajectory;
  if (traj.features.rows() == 0)
    throw ValidationError("engine " + std::to_string(traj.engine_id) + " is empty");
  const auto r = traj.features.row(traj.features.rows() - 1);
  return {traj.engine_id, traj.cycles.back(), {r.begin(), r.end()}, engine.rul.back()};
}

std::size_t effective_test_trim(std::size_t length, std::size_t trim, std::size_t window) {
  const std::size_t spare = length > window ? length - window : 0;
  return std::min(trim, spare);
}

nlohmann::json SplitSpec::to_json() const {
  return {{"seed", seed}, {"train_ids", train_ids}, {"validation_ids", validation_ids}};
}

SplitSpec SplitSpec::from_json(const nlohmann::json& j) {
  SplitSpec s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train_ids = j.at("train_ids").get<std::vector<int>>();
  s.validation_ids = j.at("validation_ids").get<std::vector<int>>();
  return s;
}

SplitSpec split_by_engine(std::span<const int> engine_ids, std::size_t n_val, std::uint64_t seed) {
  if (n_val > 0 && n_val >= engine_ids.size()) {
    throw ConfigError("validation engine count " + std::to_string(n_val) +
                      " must be smaller than the number of engines " +
                      std::to_string(engine_ids.size()));
  }
  SeededRng rng = SeededRng(seed).derive("split");
  const auto perm = rng_shuffle(rng, engine_ids.size());
  SplitSpec split;
  split.seed = seed;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const int id = engine_ids[perm[i]];
    (i < n_val ? split.validation_ids : split.train_ids).push_back(id);
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.validation_ids.begin(), split.validation_ids.end());
  return split;
}

void PreprocessConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ConfigError("alpha must lie in (0, 1], got " + std::to_string(alpha));
  if (window == 0) throw ConfigError("window must be positive");
  if (rul_cap && !(*rul_cap > 0.0)) throw ConfigError("rul_cap must be positive");
  if (!(constant_tol >= 0.0)) throw ConfigError("constant_tol must be non-negative");
  FeatureSelection sel;
  sel.dropped_sensors = dropped_sensors;
  sel.validate();
}

nlohmann::json PreprocessConfig::to_json() const {
  nlohmann::json j = {{"alpha", alpha},
                      {"trim", trim},
                      {"window", window},
                      {"n_val", n_val},
                      {"seed", seed},
                      {"constant_tol", constant_tol},
                      {"dropped_sensors", dropped_sensors}};
  j["rul_cap"] = rul_cap ? nlohmann::json(*rul_cap) : nlohmann::json(nullptr);
  return j;
}

std::uint64_t PreprocessConfig::hash() const { return fnv1a64(to_json().dump()); }

namespace {

LabeledEngine label_engine(ScaledTrajectory scaled, int terminal_rul, std::optional<double> cap) {
  LabeledEngine e;
  e.rul = label_rul(scaled.cycles, terminal_rul, cap);
  e.trajectory = std::move(scaled);
  return e;
}

EngineTrajectory smooth_and_trim_test(const EngineTrajectory& raw, const PreprocessConfig& config) {
  const auto smoothed = smooth_sensors(raw, config.alpha);
  const std::size_t trim = effective_test_trim(raw.length(), config.trim, config.window);
  return trim == 0 ? smoothed : trim_head(smoothed, trim);
}

}  // namespace

PreparedTraining prepare_training(const std::vector<EngineTrajectory>& train,
                                  const PreprocessConfig& config) {
  config.validate();
  if (train.empty()) throw ValidationError("no training engines");

  PreparedTraining out;
  out.selection.dropped_sensors = config.dropped_sensors;
  out.selection.dropped_settings = detect_constant_settings(train, config.constant_tol);

  std::vector<EngineTrajectory> cleaned;
  cleaned.reserve(train.size());
  for (const auto& engine : train)
    cleaned.push_back(trim_head(smooth_sensors(engine, config.alpha), config.trim));

  out.scaler = fit_minmax(cleaned, out.selection);

  std::vector<int> ids;
  for (const auto& e : cleaned) ids.push_back(e.engine_id);
  out.split = split_by_engine(ids, config.n_val, config.seed);
  const std::set<int> validation(out.split.validation_ids.begin(), out.split.validation_ids.end());

  for (const auto& engine : cleaned) {
    auto labeled = label_engine(apply_minmax(out.scaler, out.selection, engine), 0, config.rul_cap);
    (validation.contains(engine.engine_id) ? out.validation : out.train)
        .push_back(std::move(labeled));
  }
  return out;
}

std::vector<LabeledEngine> prepare_test(const std::vector<EngineTrajectory>& test,
                                        const RulLabelFile& labels, const ScalerParams& scaler,
                                        const FeatureSelection& selection,
                                        const PreprocessConfig& config) {
  config.validate();
  if (labels.ruls.size() != test.size()) {
    throw ValidationError("RUL label count " + std::to_string(labels.ruls.size()) +
                          " does not match test engine count " + std::to_string(test.size()));
  }
  std::vector<LabeledEngine> out;
  out.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto cleaned = smooth_and_trim_test(test[i], config);
    // Test labels stay uncapped: evaluation compares against the file value.
    out.push_back(label_engine(apply_minmax(scaler, selection, cleaned), labels.ruls[i],
                               std::nullopt));
  }
  return out;
}

std::vector<LabeledEngine> prepare_unlabeled(const std::vector<EngineTrajectory>& engines,
                                             const ScalerParams& scaler,
                                             const FeatureSelection& selection,
                                             const PreprocessConfig& config) {
  config.validate();
  std::vector<LabeledEngine> out;
  out.reserve(engines.size());
  for (const auto& raw : engines) {
    LabeledEngine e;
    e.trajectory = apply_minmax(scaler, selection, smooth_and_trim_test(raw, config));
    e.rul.assign(e.trajectory.cycles.size(), 0.0);
    out.push_back(std::move(e));
  }
  return out;
}

std::size_t count_windows(const std::vector<LabeledEngine>& engines, std::size_t window) {
  std::size_t n = 0;
  for (const auto& e : engines) {
    const std::size_t len = e.trajectory.features.rows();
    if (len >= window) n += len - window + 1;
  }
  return n;
}

}  // namespace rul
