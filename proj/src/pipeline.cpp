#include "rul/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "rul/artifacts.hpp"
#include "rul/synthetic.hpp"

namespace rul {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::use_data_dir(const fs::path& dir) {
  train_file = dir / "train_FD001.txt";
  test_file = dir / "test_FD001.txt";
  rul_file = dir / "RUL_FD001.txt";
}

PreprocessConfig RunConfig::preprocess() const {
  PreprocessConfig p;
  p.alpha = train.alpha;
  p.trim = trim;
  p.window = train.window;
  p.n_val = n_val;
  p.seed = train.seed;
  p.rul_cap = train.rul_cap;
  p.constant_tol = constant_tol;
  p.dropped_sensors = dropped_sensors;
  return p;
}

void RunConfig::validate() const {
  train.validate();
  preprocess().validate();
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

RunConfig RunConfig::from_json(const json& j) {
  static const std::set<std::string> known = {
      "train_file", "test_file",   "rul_file",   "data_dir",   "out_dir",      "model",
      "epochs",     "batch_size",  "lr",         "window",     "seed",         "alpha",
      "rul_cap",    "grad_clip",   "trim",       "n_val",      "mlp_hidden",   "lstm_hidden",
      "constant_tol", "dropped_sensors"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");

  RunConfig c;
  try {
    if (j.contains("data_dir")) c.use_data_dir(j["data_dir"].get<std::string>());
    if (j.contains("train_file")) c.train_file = j["train_file"].get<std::string>();
    if (j.contains("test_file")) c.test_file = j["test_file"].get<std::string>();
    if (j.contains("rul_file")) c.rul_file = j["rul_file"].get<std::string>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("model")) c.train.kind = parse_model_kind(j["model"].get<std::string>());
    if (j.contains("epochs")) c.train.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("batch_size")) c.train.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("lr")) c.train.lr = j["lr"].get<double>();
    if (j.contains("window")) c.train.window = j["window"].get<std::size_t>();
    if (j.contains("seed")) c.train.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("alpha")) c.train.alpha = j["alpha"].get<double>();
    if (j.contains("rul_cap") && !j["rul_cap"].is_null()) c.train.rul_cap = j["rul_cap"].get<double>();
    if (j.contains("grad_clip") && !j["grad_clip"].is_null())
      c.train.grad_clip = j["grad_clip"].get<double>();
    if (j.contains("trim")) c.trim = j["trim"].get<std::size_t>();
    if (j.contains("n_val")) c.n_val = j["n_val"].get<std::size_t>();
    if (j.contains("mlp_hidden")) c.train.mlp_hidden = j["mlp_hidden"].get<std::vector<std::size_t>>();
    if (j.contains("lstm_hidden")) c.train.lstm_hidden = j["lstm_hidden"].get<std::size_t>();
    if (j.contains("constant_tol")) c.constant_tol = j["constant_tol"].get<double>();
    if (j.contains("dropped_sensors")) c.dropped_sensors = j["dropped_sensors"].get<std::set<int>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunConfig c = from_json(j);
  // Relative dataset and output paths are taken relative to the config file.
  const auto base = path.parent_path();
  for (fs::path* p : {&c.train_file, &c.test_file, &c.rul_file, &c.out_dir})
    if (!p->empty() && p->is_relative()) *p = base / *p;
  return c;
}

namespace {

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw IoError(std::string(what) + " path is not set");
  if (!fs::is_regular_file(p)) throw IoError(std::string(what) + " not found: " + p.string());
}

json engine_to_json(const LabeledEngine& e, const char* role) {
  const auto& t = e.trajectory;
  return {{"engine_id", t.engine_id},
          {"role", role},
          {"cycles", t.cycles},
          {"rul", e.rul},
          {"cols", t.features.cols()},
          {"features", t.features.data()}};
}

LabeledEngine engine_from_json(const json& j) {
  LabeledEngine e;
  e.trajectory.engine_id = j.at("engine_id").get<int>();
  e.trajectory.cycles = j.at("cycles").get<std::vector<int>>();
  e.rul = j.at("rul").get<std::vector<double>>();
  const auto cols = j.at("cols").get<std::size_t>();
  e.trajectory.features =
      Matrix(e.trajectory.cycles.size(), cols, j.at("features").get<std::vector<double>>());
  if (e.rul.size() != e.trajectory.cycles.size())
    throw ValidationError("bundle: engine " + std::to_string(e.trajectory.engine_id) +
                          " has mismatched rul and cycle counts");
  return e;
}

}  // namespace

std::vector<EngineTrajectory> load_trajectories(const fs::path& path) {
  require_file(path, "trajectory file");
  try {
    return parse_trajectory_file(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

RulLabelFile load_labels(const fs::path& path) {
  require_file(path, "RUL label file");
  return parse_rul_file(read_text_file(path));
}

PreprocessSummary run_preprocess(const RunConfig& config) {
  config.validate();
  const auto train = load_trajectories(config.train_file);
  const auto test = load_trajectories(config.test_file);
  const auto labels = load_labels(config.rul_file);

  const auto pre = config.preprocess();
  const auto prepared = prepare_training(train, pre);
  // Fails early on label/engine count mismatches before anything is written.
  prepare_test(test, labels, prepared.scaler, prepared.selection, pre);

  PreprocessSummary s;
  s.stats = dataset_summary(train, test, labels);
  s.feature_count = prepared.selection.feature_count();
  s.feature_order = prepared.selection.feature_names();
  s.constant_sensors = detect_constant_sensors(train, config.constant_tol);
  s.fit_sequences = count_windows(prepared.train, pre.window);
  s.validation_sequences = count_windows(prepared.validation, pre.window);
  s.train_sequences = s.fit_sequences + s.validation_sequences;
  for (const auto& e : prepared.train) s.train_rows += e.trajectory.cycles.size();
  for (const auto& e : prepared.validation) s.train_rows += e.trajectory.cycles.size();
  s.preprocess_hash = hex64(pre.hash());
  s.scaler_hash = hex64(prepared.scaler.hash());

  json header = {{"format", "rul-bundle/1"},
                 {"preprocess", pre.to_json()},
                 {"preprocess_hash", s.preprocess_hash},
                 {"scaler_hash", s.scaler_hash},
                 {"feature_order", s.feature_order},
                 {"train_engines", prepared.train.size()},
                 {"validation_engines", prepared.validation.size()},
                 {"train_sequences", s.fit_sequences},
                 {"validation_sequences", s.validation_sequences}};
  std::string bundle = header.dump() + "\n";
  for (const auto& e : prepared.train) bundle += engine_to_json(e, "train").dump() + "\n";
  for (const auto& e : prepared.validation) bundle += engine_to_json(e, "validation").dump() + "\n";

  json scaler = prepared.scaler.to_json();
  scaler["preprocess_hash"] = s.preprocess_hash;
  json split = prepared.split.to_json();
  split["preprocess_hash"] = s.preprocess_hash;
  json summary = to_json(s.stats);
  summary["feature_count"] = s.feature_count;
  summary["feature_order"] = s.feature_order;
  summary["constant_sensors"] = s.constant_sensors;
  summary["dropped_settings"] = prepared.selection.dropped_settings;
  summary["training_sequences"] = s.train_sequences;
  summary["preprocess_hash"] = s.preprocess_hash;

  const ArtifactPaths paths{config.out_dir};
  write_file_atomic(paths.bundle(), bundle);
  write_file_atomic(paths.scaler(), scaler.dump(2) + "\n");
  write_file_atomic(paths.split(), split.dump(2) + "\n");
  write_file_atomic(paths.summary(), summary.dump(2) + "\n");
  return s;
}

Bundle load_bundle(const ArtifactPaths& paths) {
  require_file(paths.bundle(), "preprocessed bundle");
  require_file(paths.scaler(), "scaler");
  require_file(paths.split(), "split");
  const auto text = read_text_file(paths.bundle());
  Bundle b;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    if (end > pos) {
      const auto j = json::parse(text.substr(pos, end - pos));
      if (header) {
        if (j.at("format") != "rul-bundle/1") throw ValidationError("bundle: unknown format");
        b.preprocess_hash = j.at("preprocess_hash").get<std::string>();
        header = false;
      } else {
        auto engine = engine_from_json(j);
        (j.at("role") == "validation" ? b.validation : b.train).push_back(std::move(engine));
      }
    }
    pos = end + 1;
  }
  if (header) throw ValidationError("bundle: missing header");
  b.scaler = ScalerParams::from_json(json::parse(read_text_file(paths.scaler())));
  b.split = SplitSpec::from_json(json::parse(read_text_file(paths.split())));
  return b;
}

TrainRunResult run_train(const RunConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const ArtifactPaths paths{config.out_dir};
  const auto bundle = load_bundle(paths);
  const auto pre = config.preprocess();
  if (bundle.preprocess_hash != hex64(pre.hash())) {
    throw StaleScalerError("bundle was preprocessed with settings " + bundle.preprocess_hash +
                           " but this run uses " + hex64(pre.hash()) + "; re-run preprocess");
  }
  const auto kind = config.train.kind;
  const auto train_set = build_training_set(kind, bundle.train, config.train.window);
  const auto val_set = build_training_set(kind, bundle.validation, config.train.window);

  TrainRunResult out{train(config.train, train_set, val_set, on_epoch), train_set.size(),
                     val_set.size()};

  Checkpoint ckpt{out.result.model,           out.result.optimizer,   config.train,
                  bundle.scaler.feature_names, hex64(bundle.scaler.hash()), bundle.preprocess_hash};
  write_file_atomic(paths.checkpoint(kind), ckpt.to_json().dump() + "\n");
  write_file_atomic(paths.history(kind), out.result.history.to_csv());
  return out;
}

EvalReport run_evaluate(const RunConfig& config) {
  config.validate();
  const ArtifactPaths paths{config.out_dir};
  const auto kind = config.train.kind;
  require_file(paths.checkpoint(kind), "checkpoint");
  require_file(paths.scaler(), "scaler");
  const auto ckpt_text = read_text_file(paths.checkpoint(kind));
  const auto ckpt = Checkpoint::from_json(json::parse(ckpt_text));
  const auto scaler = ScalerParams::from_json(json::parse(read_text_file(paths.scaler())));
  const auto pre = config.preprocess();
  if (ckpt.preprocess_hash != hex64(pre.hash())) {
    throw StaleScalerError("checkpoint was trained with preprocessing " + ckpt.preprocess_hash +
                           " but evaluation uses " + hex64(pre.hash()));
  }
  const auto test = load_trajectories(config.test_file);
  const auto labels = load_labels(config.rul_file);

  auto report = evaluate(ckpt, test, labels, scaler, pre);
  report.checkpoint_hash = hex64(fnv1a64(ckpt_text));
  write_file_atomic(paths.report(kind), report.to_json().dump(2) + "\n");
  write_file_atomic(paths.predictions(kind), report.predictions_csv());
  return report;
}

std::vector<EnginePrediction> run_predict(const RunConfig& config, const fs::path& input) {
  config.validate();
  const ArtifactPaths paths{config.out_dir};
  const auto kind = config.train.kind;
  require_file(paths.checkpoint(kind), "checkpoint");
  const auto ckpt = Checkpoint::from_json(json::parse(read_text_file(paths.checkpoint(kind))));
  const auto scaler = ScalerParams::from_json(json::parse(read_text_file(paths.scaler())));
  if (hex64(scaler.hash()) != ckpt.scaler_hash)
    throw StaleScalerError("scaler.json does not match the checkpoint's scaler");
  const auto pre = config.preprocess();
  if (ckpt.preprocess_hash != hex64(pre.hash()))
    throw StaleScalerError("checkpoint was trained with preprocessing " + ckpt.preprocess_hash +
                           ", current settings hash to " + hex64(pre.hash()));
  const auto engines = prepare_unlabeled(load_trajectories(input), scaler,
                                         FeatureSelection::from_feature_names(scaler.feature_names),
                                         pre);
  const auto predict = model_predictor(ckpt.model, pre.window);
  std::vector<EnginePrediction> out;
  for (const auto& e : engines)
    out.push_back({e.trajectory.engine_id, e.trajectory.cycles.back(), predict(e)});
  return out;
}

std::string predictions_to_csv(const std::vector<EnginePrediction>& predictions) {
  std::string out = "engine_id,last_cycle,predicted_rul\n";
  for (const auto& p : predictions)
    out += std::to_string(p.engine_id) + "," + std::to_string(p.last_cycle) + "," +
           format_double(p.predicted_rul) + "\n";
  return out;
}

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

VerifyReport run_verify(const VerifyOptions& options, const std::vector<EngineTrajectory>* engines) {
  constexpr double kGradTol = 1e-5;
  VerifyReport report;
  auto add = [&](std::string name, bool ok, std::string detail) {
    report.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  for (const auto kind : {ModelKind::mlp, ModelKind::lstm}) {
    const auto g =
        gradient_check_suite(kind, options.gradcheck_trials, options.seed, options.tamper);
    report.max_grad_rel_error = std::max(report.max_grad_rel_error, g.max_rel_error);
    add("gradient check (" + to_string(kind) + ")", g.max_rel_error < kGradTol,
        std::to_string(g.trials) + " trials, " + std::to_string(g.entries_checked) +
            " entries, max rel error " + format_double(g.max_rel_error) +
            (g.worst_tensor.empty() ? "" : " in " + g.worst_tensor));
  }

  {
    const std::vector<double> constant(8, 3.25);
    bool fixed_point = true;
    for (double a : {0.05, 0.1, 0.5, 1.0}) fixed_point &= ewma_smooth(constant, a) == constant;
    const std::vector<double> series{1.0, -2.0, 7.5, 0.25};
    add("ewma fixed point and identity", fixed_point && ewma_smooth(series, 1.0) == series,
        "constant series unchanged for all alpha; alpha=1 returns input");
  }

  std::vector<EngineTrajectory> synthetic;
  if (!engines) {
    SyntheticFleetSpec spec;
    spec.train_engines = 40;
    spec.test_engines = 0;
    spec.seed = options.seed;
    synthetic = make_synthetic_fleet(spec).train;
    engines = &synthetic;
  }

  PreprocessConfig pre;
  pre.seed = options.seed;
  pre.n_val = std::min<std::size_t>(pre.n_val, engines->size() / 5);
  const auto prepared = prepare_training(*engines, pre);

  double lo = 1.0, hi = 0.0;
  for (const auto* group : {&prepared.train, &prepared.validation})
    for (const auto& e : *group)
      for (double v : e.trajectory.features.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  add("scaled training features in [0,1]", lo >= 0.0 && hi <= 1.0,
      "observed range [" + format_double(lo) + ", " + format_double(hi) + "]");

  double worst = 0.0;
  for (const auto& engine : *engines) {
    const auto cleaned = trim_head(smooth_sensors(engine, pre.alpha), pre.trim);
    std::vector<double> raw(prepared.selection.feature_count());
    for (std::size_t t = 0; t < cleaned.length(); ++t) {
      prepared.selection.extract(cleaned.cycles[t], raw);
      for (std::size_t k = 0; k < raw.size(); ++k) {
        const double back = prepared.scaler.inverse(k, prepared.scaler.transform(k, raw[k]));
        worst = std::max(worst, std::abs(back - raw[k]) / std::max(1.0, std::abs(raw[k])));
      }
    }
  }
  add("scaler inverse round trip", worst <= 1e-12, "max relative error " + format_double(worst));

  std::set<int> train_ids(prepared.split.train_ids.begin(), prepared.split.train_ids.end());
  std::set<int> val_ids(prepared.split.validation_ids.begin(), prepared.split.validation_ids.end());
  bool disjoint = std::none_of(val_ids.begin(), val_ids.end(),
                               [&](int id) { return train_ids.contains(id); });
  add("engine split disjoint and exhaustive",
      disjoint && train_ids.size() + val_ids.size() == engines->size() &&
          val_ids.size() == pre.n_val,
      std::to_string(train_ids.size()) + " train / " + std::to_string(val_ids.size()) +
          " validation of " + std::to_string(engines->size()));

  std::size_t expected = 0, emitted = 0;
  bool contiguous = true;
  for (const auto* group : {&prepared.train, &prepared.validation}) {
    for (const auto& e : *group) {
      expected += e.trajectory.cycles.size() - (pre.window - 1);
      const auto windows = make_windows(e, pre.window);
      emitted += windows.size();
      for (const auto& w : windows) {
        const auto end = std::find(e.trajectory.cycles.begin(), e.trajectory.cycles.end(),
                                   w.end_cycle);
        contiguous &= w.engine_id == e.trajectory.engine_id &&
                      end - e.trajectory.cycles.begin() >= static_cast<long>(pre.window - 1) &&
                      *(end - static_cast<long>(pre.window - 1)) == w.end_cycle - static_cast<int>(pre.window - 1);
      }
    }
  }
  add("window count and contiguity", expected == emitted && contiguous,
      std::to_string(emitted) + " windows, expected " + std::to_string(expected));
  return report;
}

}  // namespace rul
