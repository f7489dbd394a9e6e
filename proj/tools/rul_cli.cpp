// Command-line front end: preprocess, train, evaluate, predict, verify.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rul/artifacts.hpp"
#include "rul/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string data_dir;
  std::string train_file, test_file, rul_file;
  std::string out;
  std::string model;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, batch_size, window;
  std::optional<double> lr, alpha, rul_cap, grad_clip;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run config");
  cmd->add_option("--data-dir", o.data_dir, "directory holding train/test/RUL_FD001.txt");
  cmd->add_option("--train-file", o.train_file);
  cmd->add_option("--test-file", o.test_file);
  cmd->add_option("--rul-file", o.rul_file);
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--model", o.model, "mlp or lstm")->check(CLI::IsMember({"mlp", "lstm"}));
  cmd->add_option("--seed", o.seed);
  cmd->add_option("--epochs", o.epochs);
  cmd->add_option("--lr", o.lr);
  cmd->add_option("--batch-size", o.batch_size);
  cmd->add_option("--window", o.window);
  cmd->add_option("--alpha", o.alpha);
  cmd->add_option("--rul-cap", o.rul_cap);
  cmd->add_option("--grad-clip", o.grad_clip);
}

rul::RunConfig resolve(const Overrides& o) {
  rul::RunConfig c = o.config.empty() ? rul::RunConfig{} : rul::RunConfig::load(o.config);
  if (!o.data_dir.empty()) c.use_data_dir(o.data_dir);
  if (!o.train_file.empty()) c.train_file = o.train_file;
  if (!o.test_file.empty()) c.test_file = o.test_file;
  if (!o.rul_file.empty()) c.rul_file = o.rul_file;
  if (!o.out.empty()) c.out_dir = o.out;
  if (!o.model.empty()) c.train.kind = rul::parse_model_kind(o.model);
  if (o.seed) c.train.seed = *o.seed;
  if (o.epochs) c.train.epochs = *o.epochs;
  if (o.batch_size) c.train.batch_size = *o.batch_size;
  if (o.window) c.train.window = *o.window;
  if (o.lr) c.train.lr = *o.lr;
  if (o.alpha) c.train.alpha = *o.alpha;
  if (o.rul_cap) c.train.rul_cap = *o.rul_cap;
  if (o.grad_clip) c.train.grad_clip = *o.grad_clip;
  c.validate();
  return c;
}

int cmd_preprocess(const rul::RunConfig& c) {
  const auto s = rul::run_preprocess(c);
  std::cout << "train engines: " << s.stats.train.engines << "\n"
            << "test engines: " << s.stats.test.engines << "\n"
            << "rul labels: " << s.stats.label_count << "\n"
            << "features: " << s.feature_count << "\n"
            << "training samples: " << s.train_sequences << "\n"
            << "  fit split: " << s.fit_sequences << "\n"
            << "  validation split: " << s.validation_sequences << "\n"
            << "preprocess hash: " << s.preprocess_hash << "\n";
  for (const auto& flag : s.stats.flags) std::cout << "warning: " << flag << "\n";
  return 0;
}

int cmd_train(const rul::RunConfig& c) {
  std::cout << "training " << rul::to_string(c.train.kind) << " for " << c.train.epochs
            << " epochs (seed " << c.train.seed << ")\n";
  const auto r = rul::run_train(c, [](const rul::EpochRecord& e) {
    std::printf("epoch %3zu  train_mse %12.4f  val_mse %12s  (%.1fs)\n", e.epoch, e.train_mse,
                e.val_mse ? rul::format_double(*e.val_mse).substr(0, 12).c_str() : "-",
                e.seconds);
    std::fflush(stdout);
  });
  std::cout << "samples: " << r.train_samples << " train, " << r.validation_samples
            << " validation\n"
            << "wrote " << rul::ArtifactPaths{c.out_dir}.checkpoint(c.train.kind).string() << "\n";
  return 0;
}

int cmd_evaluate(const rul::RunConfig& c) {
  const auto report = rul::run_evaluate(c);
  std::cout << "engines: " << report.rows.size() << "\n"
            << "test MSE: " << rul::format_double(report.mse) << "\n";
  return 0;
}

int cmd_predict(const rul::RunConfig& c, const std::string& input, const std::string& output) {
  const auto csv = rul::predictions_to_csv(rul::run_predict(c, input));
  if (output.empty()) {
    std::cout << csv;
  } else {
    rul::write_file_atomic(output, csv);
  }
  return 0;
}

int cmd_verify(std::size_t trials, std::uint64_t seed, const std::string& train_file) {
  rul::VerifyOptions opts;
  opts.gradcheck_trials = trials;
  opts.seed = seed;
  std::vector<rul::EngineTrajectory> engines;
  if (!train_file.empty()) engines = rul::load_trajectories(train_file);
  const auto report = rul::run_verify(opts, train_file.empty() ? nullptr : &engines);
  for (const auto& c : report.checks)
    std::cout << (c.passed ? "[pass] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
  std::cout << "max gradient rel error: " << rul::format_double(report.max_grad_rel_error) << "\n";
  if (!report.all_passed()) {
    std::cout << "verification failed\n";
    return 1;
  }
  std::cout << "all checks passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Remaining-useful-life toolkit for C-MAPSS turbofan data"};
  app.require_subcommand(1);

  Overrides o;
  auto* pre = app.add_subcommand("preprocess", "parse, clean, scale and split the dataset");
  auto* trn = app.add_subcommand("train", "train a model on the preprocessed bundle");
  auto* evl = app.add_subcommand("evaluate", "score a trained model on the test set");
  auto* prd = app.add_subcommand("predict", "predict RUL for each engine in a trajectory file");
  auto* ver = app.add_subcommand("verify", "gradient checks and preprocessing invariants");
  for (auto* cmd : {pre, trn, evl, prd}) add_common(cmd, o);

  std::string input, output;
  prd->add_option("--input", input, "trajectory file")->required();
  prd->add_option("--output", output, "CSV destination (default stdout)");

  std::size_t trials = 100;
  std::uint64_t verify_seed = 42;
  std::string verify_train;
  ver->add_option("--trials", trials, "gradient-check trials per model");
  ver->add_option("--seed", verify_seed);
  ver->add_option("--train-file", verify_train, "run preprocessing invariants on this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ver->parsed()) return cmd_verify(trials, verify_seed, verify_train);
    const auto config = resolve(o);
    if (pre->parsed()) return cmd_preprocess(config);
    if (trn->parsed()) return cmd_train(config);
    if (evl->parsed()) return cmd_evaluate(config);
    if (prd->parsed()) return cmd_predict(config, input, output);
  } catch (const rul::StaleScalerError& e) {
    std::cerr << "error: stale artifacts: " << e.what() << "\n";
    return 3;
  } catch (const rul::TrainingDiverged& e) {
    std::cerr << "error: training diverged: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
