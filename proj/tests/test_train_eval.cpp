#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rul/artifacts.hpp"
#include "rul/synthetic.hpp"
#include "rul/train_eval.hpp"

using namespace rul;

namespace {

TrainingSet linear_rows() {
  TrainingSet set;
  set.kind = ModelKind::mlp;
  for (double x : {0.1, 0.5, 0.9}) set.rows.push_back({1, 1, {x, 0.3}, 2.0 * x + 1.0});
  return set;
}

TrainingSet linear_windows() {
  TrainingSet set;
  set.kind = ModelKind::lstm;
  for (double x : {0.1, 0.5, 0.9}) set.sequences.push_back({1, 1, Matrix(4, 2, x), 2.0 * x + 1.0});
  return set;
}

struct SmallRun {
  PreparedTraining prepared;
  std::vector<LabeledEngine> test;
  PreprocessConfig pre;
};

SmallRun small_fleet() {
  SyntheticFleetSpec spec;
  spec.train_engines = 12;
  spec.test_engines = 6;
  spec.min_life = 60;
  spec.max_life = 90;
  const auto fleet = make_synthetic_fleet(spec);
  SmallRun run;
  run.pre.n_val = 3;
  run.pre.window = 8;
  run.prepared = prepare_training(fleet.train, run.pre);
  run.test = prepare_test(fleet.test, fleet.labels, run.prepared.scaler, run.prepared.selection,
                          run.pre);
  return run;
}

}  // namespace

TEST_CASE("train config defaults mirror the training table") {
  TrainConfig c;
  CHECK(c.epochs == 35);
  CHECK(c.batch_size == 64);
  CHECK(c.lr == 0.001);
  CHECK(c.window == 20);
  CHECK(c.lstm_hidden == 64);
  CHECK(c.mlp_hidden == std::vector<std::size_t>{64, 32});
  CHECK_FALSE(c.rul_cap.has_value());
  CHECK_FALSE(c.grad_clip.has_value());
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(parse_model_kind("cnn"), ConfigError);
}

TEST_CASE("training loss strictly decreases on a linear target") {
  for (auto set : {linear_rows(), linear_windows()}) {
    TrainConfig c;
    c.kind = set.kind;
    c.epochs = 50;
    c.mlp_hidden = {8, 4};
    c.lstm_hidden = 4;
    const auto r = train(c, set, TrainingSet{set.kind, {}, {}});
    REQUIRE(r.history.epochs.size() == 50);
    for (std::size_t e = 1; e < 50; ++e)
      CHECK(r.history.epochs[e].train_mse < r.history.epochs[e - 1].train_mse);
    CHECK_FALSE(r.history.epochs.back().val_mse.has_value());
    CHECK(r.optimizer.step == 50);
  }
}

TEST_CASE("training is deterministic per seed and audits engine usage") {
  auto run = small_fleet();
  for (auto kind : {ModelKind::mlp, ModelKind::lstm}) {
    TrainConfig c;
    c.kind = kind;
    c.epochs = 3;
    c.window = run.pre.window;
    c.lstm_hidden = 8;
    c.mlp_hidden = {16, 8};
    const auto tr = build_training_set(kind, run.prepared.train, c.window);
    const auto va = build_training_set(kind, run.prepared.validation, c.window);
    const auto a = train(c, tr, va);
    const auto b = train(c, tr, va);
    CHECK(a.history.to_csv() == b.history.to_csv());
    CHECK(tensors_of(a.model) == tensors_of(b.model));

    c.seed = 43;
    CHECK(tensors_of(train(c, tr, va).model) != tensors_of(a.model));

    const std::set<int> train_ids(run.prepared.split.train_ids.begin(),
                                  run.prepared.split.train_ids.end());
    CHECK(a.gradient_engine_ids == train_ids);
    for (int id : run.prepared.split.validation_ids) CHECK_FALSE(a.gradient_engine_ids.contains(id));

    REQUIRE(a.history.epochs.size() == 3);
    for (const auto& e : a.history.epochs) {
      CHECK(std::isfinite(e.train_mse));
      REQUIRE(e.val_mse.has_value());
      CHECK(std::isfinite(*e.val_mse));
    }
    const auto expected_steps = 3 * ((tr.size() + c.batch_size - 1) / c.batch_size);
    CHECK(a.optimizer.step == expected_steps);
  }
}

TEST_CASE("history csv format") {
  TrainHistory h;
  h.epochs.push_back({1, 0.1, 0.25, 3.0});
  h.epochs.push_back({2, 1.0 / 3.0, std::nullopt, 1.0});
  CHECK(h.to_csv() ==
        "epoch,train_mse,val_mse\n"
        "1,0.10000000000000001,0.25\n"
        "2,0.33333333333333331,\n");
}

TEST_CASE("training failure modes") {
  TrainConfig c;
  c.kind = ModelKind::mlp;
  CHECK_THROWS_AS(train(c, TrainingSet{ModelKind::mlp, {}, {}}, TrainingSet{ModelKind::mlp, {}, {}}),
                  ConfigError);
  CHECK_THROWS_AS(train(c, linear_windows(), TrainingSet{ModelKind::lstm, {}, {}}), ConfigError);

  auto huge = linear_rows();
  for (auto& r : huge.rows) r.target_rul = 1e200;
  c.epochs = 2;
  CHECK_THROWS_WITH_AS(train(c, huge, TrainingSet{ModelKind::mlp, {}, {}}),
                       doctest::Contains("epoch 1"), TrainingDiverged);
}

TEST_CASE("gradient clipping bounds the update direction") {
  TrainConfig c;
  c.kind = ModelKind::mlp;
  c.epochs = 3;
  c.grad_clip = 1e-3;
  c.mlp_hidden = {4};
  const auto r = train(c, linear_rows(), TrainingSet{ModelKind::mlp, {}, {}});
  CHECK(r.history.epochs.size() == 3);
}

TEST_CASE("evaluation") {
  auto run = small_fleet();
  SUBCASE("perfect oracle scores zero") {
    const auto report =
        evaluate_engines(run.test, [](const LabeledEngine& e) { return e.rul.back(); });
    CHECK(report.mse == 0.0);
    CHECK(report.rows.size() == run.test.size());
  }
  SUBCASE("aggregate equals mean of per-engine squared errors") {
    const auto report = evaluate_engines(
        run.test, [](const LabeledEngine& e) { return 40.0 - 0.5 * e.trajectory.engine_id; });
    double sum = 0.0;
    for (const auto& r : report.rows) sum += (r.predicted_rul - r.true_rul) * (r.predicted_rul - r.true_rul);
    CHECK(std::abs(report.mse - sum / report.rows.size()) <= 1e-9);
  }
  SUBCASE("negative predictions are kept raw and clamped in the auxiliary column") {
    const auto report = evaluate_engines(run.test, [](const LabeledEngine&) { return -5.0; });
    CHECK(report.rows[0].predicted_rul == -5.0);
    CHECK(report.rows[0].predicted_rul_clamped == 0.0);
    const auto csv = report.predictions_csv();
    CHECK(csv.rfind("engine_id,true_rul,predicted_rul,predicted_rul_clamped\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(run.test.size()) + 1);
  }
}

TEST_CASE("checkpoint round trip and stale scaler detection") {
  auto run = small_fleet();
  TrainConfig c;
  c.kind = ModelKind::lstm;
  c.epochs = 1;
  c.window = run.pre.window;
  c.lstm_hidden = 4;
  const auto tr = build_training_set(c.kind, run.prepared.train, c.window);
  const auto r = train(c, tr, TrainingSet{c.kind, {}, {}});

  Checkpoint ckpt{r.model, r.optimizer, c, run.prepared.scaler.feature_names,
                  hex64(run.prepared.scaler.hash()), hex64(run.pre.hash())};
  const auto text = ckpt.to_json().dump();
  const auto back = Checkpoint::from_json(nlohmann::json::parse(text));
  CHECK(tensors_of(back.model) == tensors_of(r.model));
  CHECK(back.optimizer == r.optimizer);
  CHECK(back.to_json().dump() == text);
  CHECK_FALSE(ckpt.to_json().contains("gate_order"));
  CHECK(ckpt.to_json()["architecture"]["gate_order"] == nlohmann::json({"i", "f", "g", "o"}));

  SyntheticFleetSpec spec;
  spec.train_engines = 12;
  spec.test_engines = 6;
  spec.min_life = 60;
  spec.max_life = 90;
  const auto fleet = make_synthetic_fleet(spec);
  const auto report = evaluate(back, fleet.test, fleet.labels, run.prepared.scaler, run.pre);
  CHECK(report.rows.size() == 6);
  CHECK(report.model == "lstm");

  auto other = run.prepared.scaler;
  other.maxs[0] += 1.0;
  CHECK_THROWS_AS(evaluate(back, fleet.test, fleet.labels, other, run.pre), StaleScalerError);
  CHECK_THROWS_AS(evaluate(back, fleet.test, RulLabelFile{{1}}, run.prepared.scaler, run.pre),
                  ValidationError);
}
