#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rul/loss.hpp"
#include "rul/lstm.hpp"
#include "rul/mlp.hpp"
#include "rul/train_eval.hpp"

using namespace rul;

namespace {

LstmParams zero_lstm(std::size_t f, std::size_t h) {
  SeededRng rng(1);
  auto p = init_lstm({f, h}, rng);
  for (auto& t : p.tensors.tensors) t.fill(0.0);
  return p;
}

// Hand-set 2-feature, H=2 network; the expected output below was produced by
// an independent scalar unrolling of the gate equations.
LstmParams hand_lstm() {
  auto p = zero_lstm(2, 2);
  for (std::size_t r = 0; r < 8; ++r) {
    p.tensors[LstmParams::kW](r, 0) = 0.1 * (r + 1) * (r % 2 == 0 ? 1.0 : -1.0);
    p.tensors[LstmParams::kW](r, 1) = 0.05 * (static_cast<double>(r) - 3.0);
    p.tensors[LstmParams::kU](r, 0) = 0.02 * (static_cast<double>(r) - 4.0);
    p.tensors[LstmParams::kU](r, 1) = 0.03 * (2.0 - static_cast<double>(r));
  }
  p.tensors[LstmParams::kB] = Matrix{{0.1, -0.1, 1.0, 1.0, 0.0, 0.2, -0.3, 0.1}};
  p.tensors[LstmParams::kHeadW] = Matrix{{1.5, -2.0}};
  p.tensors[LstmParams::kHeadB] = Matrix{{0.25}};
  return p;
}

}  // namespace

TEST_CASE("mlp init") {
  SeededRng a(3), b(3);
  const auto p = init_mlp({100, {8, 4}}, a);
  CHECK(p.tensors == init_mlp({100, {8, 4}}, b).tensors);
  for (double v : p.weight(0).data()) {
    CHECK(v > -0.1);
    CHECK(v < 0.1);
  }
  for (std::size_t l = 0; l < p.layers(); ++l)
    for (double v : p.bias(l).data()) CHECK(v == 0.0);
  CHECK(p.weight(2).rows() == 1);
  CHECK_THROWS_AS(init_mlp({4, {0}}, a), ConfigError);
  CHECK_THROWS_AS(init_mlp({0, {4}}, a), ConfigError);
}

TEST_CASE("mlp forward") {
  SUBCASE("zero parameters predict zero") {
    SeededRng rng(1);
    auto p = init_mlp({3, {4, 2}}, rng);
    for (auto& t : p.tensors.tensors) t.fill(0.0);
    CHECK(mlp_predict(p, std::vector<double>{5.0, -2.0, 1.0}) == 0.0);
  }
  SUBCASE("hand-set 2-2-1 network") {
    TensorSet t;
    t.add("W0", Matrix{{1.0, -1.0}, {0.5, 2.0}});
    t.add("b0", Matrix{{0.0, -1.0}});
    t.add("W1", Matrix{{3.0, -2.0}});
    t.add("b1", Matrix{{0.5}});
    const auto p = make_mlp({2, {2}}, t);
    // relu([1, 2]) -> 3*1 - 2*2 + 0.5
    CHECK(mlp_predict(p, std::vector<double>{2.0, 1.0}) == doctest::Approx(-0.5));
    // relu([-2, 5.5]) -> -2*5.5 + 0.5
    CHECK(mlp_predict(p, std::vector<double>{1.0, 3.0}) == doctest::Approx(-10.5));
  }
  SUBCASE("batched forward equals independent forwards") {
    SeededRng rng(8);
    const auto p = init_mlp({5, {64, 32}}, rng);
    const auto x = rng_uniform(rng, 0.0, 1.0, 64, 5);
    const auto batched = mlp_forward(p, x).predictions;
    for (std::size_t i = 0; i < 64; ++i) CHECK(batched[i] == mlp_predict(p, x.row(i)));
  }
  SUBCASE("shape mismatch") {
    SeededRng rng(1);
    const auto p = init_mlp({3, {4}}, rng);
    CHECK_THROWS_AS(mlp_forward(p, Matrix(2, 4)), ShapeError);
  }
}

TEST_CASE("lstm init") {
  SeededRng a(5), b(5);
  const auto p = init_lstm({100, 6}, a);
  CHECK(p.tensors == init_lstm({100, 6}, b).tensors);
  for (std::size_t j = 0; j < 24; ++j) CHECK(p.b()(0, j) == (j >= 6 && j < 12 ? 1.0 : 0.0));
  for (double v : p.W().data()) CHECK(std::abs(v) < 0.1);
  CHECK(p.W().rows() == 24);
  CHECK(p.U().cols() == 6);
  CHECK(p.head_b()(0, 0) == 0.0);
}

TEST_CASE("lstm cell forward") {
  SUBCASE("zero parameters") {
    const auto p = zero_lstm(3, 4);
    const auto s = lstm_cell_forward(p, Matrix{{1.0, -2.0, 3.0}}, Matrix(1, 4), Matrix(1, 4));
    for (double v : s.c.data()) CHECK(v == 0.0);
    for (double v : s.h.data()) CHECK(v == 0.0);
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(s.gates(0, j) == 0.5);
      CHECK(s.gates(0, 4 + j) == 0.5);
      CHECK(s.gates(0, 8 + j) == 0.0);
      CHECK(s.gates(0, 12 + j) == 0.5);
    }
  }
  SUBCASE("scalar H=1 F=1 hand evaluation") {
    auto p = zero_lstm(1, 1);
    p.tensors[LstmParams::kW] = Matrix{{0.5}, {-0.5}, {1.0}, {2.0}};
    p.tensors[LstmParams::kU] = Matrix{{0.1}, {0.2}, {0.3}, {0.4}};
    p.tensors[LstmParams::kB] = Matrix{{0.0, 1.0, 0.0, -1.0}};
    const auto s = lstm_cell_forward(p, Matrix{{1.0}}, Matrix{{0.5}}, Matrix{{0.2}});
    CHECK(s.c(0, 0) == doctest::Approx(0.6476982267803398).epsilon(1e-14));
    CHECK(s.h(0, 0) == doctest::Approx(0.4381501111062991).epsilon(1e-14));
  }
  SUBCASE("saturated forget/input gates keep the cell state") {
    auto p = zero_lstm(2, 3);
    for (std::size_t j = 0; j < 3; ++j) {
      p.tensors[LstmParams::kB](0, j) = -1000.0;
      p.tensors[LstmParams::kB](0, 3 + j) = 1000.0;
    }
    const Matrix c_prev{{0.7, -1.3, 2.0}};
    const auto s = lstm_cell_forward(p, Matrix{{0.4, 0.9}}, Matrix{{0.1, 0.2, 0.3}}, c_prev);
    CHECK(s.c == c_prev);
  }
  SUBCASE("shape mismatch") {
    const auto p = zero_lstm(2, 3);
    CHECK_THROWS_AS(lstm_cell_forward(p, Matrix(1, 3), Matrix(1, 3), Matrix(1, 3)), ShapeError);
  }
}

TEST_CASE("lstm sequence forward") {
  SUBCASE("zero parameters predict the head bias") {
    auto p = zero_lstm(3, 4);
    p.tensors[LstmParams::kHeadB](0, 0) = 42.5;
    Matrix window(20, 3, 0.6);
    CHECK(lstm_predict(p, window) == 42.5);
  }
  SUBCASE("hand-set H=2, three steps") {
    const Matrix window{{0.2, 0.9}, {0.5, 0.4}, {0.8, 0.1}};
    CHECK(lstm_predict(hand_lstm(), window) == doctest::Approx(0.6131540715638963).epsilon(1e-14));
  }
  SUBCASE("predictions are independent of batch mates and of previous calls") {
    SeededRng rng(4);
    const auto p = init_lstm({3, 5}, rng);
    const auto w0 = rng_uniform(rng, 0.0, 1.0, 20, 3);
    const auto w1 = rng_uniform(rng, 0.0, 1.0, 20, 3);
    const Matrix* both[] = {&w0, &w1};
    const auto batched = lstm_sequence_forward(p, time_major(both)).predictions;
    CHECK(batched[0] == lstm_predict(p, w0));
    CHECK(batched[1] == lstm_predict(p, w1));
    CHECK(lstm_predict(p, w0) == lstm_predict(p, w0));
  }
  SUBCASE("hidden state stays within [-1, 1]") {
    SeededRng rng(6);
    auto p = init_lstm({4, 6}, rng);
    for (auto& t : p.tensors.tensors)
      for (double& v : t.data()) v = rng.uniform(-5.0, 5.0);
    const auto w = rng_uniform(rng, -10.0, 10.0, 20, 4);
    const Matrix* one[] = {&w};
    const auto fwd = lstm_sequence_forward(p, time_major(one));
    for (const auto& s : fwd.cache.steps)
      for (double v : s.h.data()) CHECK(std::abs(v) <= 1.0);
  }
}

TEST_CASE("mse loss") {
  const std::vector<double> y{1.0, 2.0, 3.0};
  auto r = mse_loss(y, y);
  CHECK(r.loss == 0.0);
  for (double g : r.grad) CHECK(g == 0.0);
  r = mse_loss(std::vector<double>{3.0}, std::vector<double>{1.0});
  CHECK(r.loss == 4.0);
  CHECK(r.grad == std::vector<double>{4.0});
  CHECK_THROWS(mse_loss(std::vector<double>{}, std::vector<double>{}));
  CHECK_THROWS_AS(mse_loss(y, std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("backward passes") {
  SeededRng rng(12);
  SUBCASE("zero loss gradient gives zero gradients") {
    const auto mlp = init_mlp({3, {4, 2}}, rng);
    const auto mf = mlp_forward(mlp, rng_uniform(rng, 0, 1, 2, 3));
    const auto mg = mlp_backward(mlp, mf.cache, std::vector<double>{0.0, 0.0});
    CHECK(mg.squared_norm() == 0.0);

    const auto lstm = init_lstm({3, 4}, rng);
    const auto w = rng_uniform(rng, 0, 1, 5, 3);
    const Matrix* one[] = {&w};
    const auto lf = lstm_sequence_forward(lstm, time_major(one));
    CHECK(lstm_backward(lstm, lf.cache, std::vector<double>{0.0}).squared_norm() == 0.0);
  }
  SUBCASE("head bias gradient is the summed loss gradient") {
    const auto lstm = init_lstm({2, 3}, rng);
    const auto w0 = rng_uniform(rng, 0, 1, 4, 2);
    const auto w1 = rng_uniform(rng, 0, 1, 4, 2);
    const Matrix* both[] = {&w0, &w1};
    const auto lf = lstm_sequence_forward(lstm, time_major(both));
    const auto loss = mse_loss(lf.predictions, std::vector<double>{10.0, -3.0});
    const auto g = lstm_backward(lstm, lf.cache, loss.grad);
    CHECK(g[LstmParams::kHeadB](0, 0) == doctest::Approx(loss.grad[0] + loss.grad[1]));
    const double mean_residual =
        (lf.predictions[0] - 10.0 + lf.predictions[1] + 3.0) / 2.0;
    CHECK(g[LstmParams::kHeadB](0, 0) == doctest::Approx(2.0 * mean_residual));
  }
  SUBCASE("mismatched cache is rejected") {
    const auto lstm = init_lstm({2, 3}, rng);
    const auto w = rng_uniform(rng, 0, 1, 4, 2);
    const Matrix* one[] = {&w};
    const auto lf = lstm_sequence_forward(lstm, time_major(one));
    CHECK_THROWS_AS(lstm_backward(lstm, lf.cache, std::vector<double>{1.0, 2.0}), ShapeError);
    const auto other = init_lstm({2, 5}, rng);
    CHECK_THROWS_AS(lstm_backward(other, lf.cache, std::vector<double>{1.0}), ShapeError);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  const auto mlp = gradient_check_suite(ModelKind::mlp, 100, 2024);
  const auto lstm = gradient_check_suite(ModelKind::lstm, 100, 2024);
  CHECK(mlp.trials == 100);
  CHECK(lstm.trials == 100);
  CHECK(mlp.max_rel_error < 1e-5);
  CHECK(lstm.max_rel_error < 1e-5);
  MESSAGE("mlp max rel error " << mlp.max_rel_error << ", lstm " << lstm.max_rel_error);
}

TEST_CASE("gradient check detects a perturbed backward pass") {
  const auto r = gradient_check_suite(ModelKind::lstm, 5, 1, [](GradientSet& g) {
    g[LstmParams::kU].data()[0] += 1e-3;
  });
  CHECK(r.max_rel_error > 1e-5);
  CHECK(r.worst_tensor == "U");
}

TEST_CASE("a weight the prediction ignores gets zero gradient both ways") {
  // Zero head weight blocks every path from W, U and b to the output.
  SeededRng rng(3);
  auto p = init_lstm({2, 2}, rng);
  p.tensors[LstmParams::kHeadW].fill(0.0);
  const auto w = rng_uniform(rng, 0, 1, 3, 2);
  const Matrix* one[] = {&w};
  const auto fwd = lstm_sequence_forward(p, time_major(one));
  const auto loss = mse_loss(fwd.predictions, std::vector<double>{1.0});
  const auto g = lstm_backward(p, fwd.cache, loss.grad);
  CHECK(g[LstmParams::kW] == Matrix(g[LstmParams::kW].rows(), g[LstmParams::kW].cols(), 0.0));

  const double eps = 1e-5;
  auto bumped = p;
  bumped.tensors[LstmParams::kW](0, 0) += eps;
  const double up = mse_loss(std::vector<double>{lstm_predict(bumped, w)}, std::vector<double>{1.0}).loss;
  bumped.tensors[LstmParams::kW](0, 0) -= 2 * eps;
  const double down =
      mse_loss(std::vector<double>{lstm_predict(bumped, w)}, std::vector<double>{1.0}).loss;
  CHECK(std::abs((up - down) / (2 * eps)) <= eps * eps);
}
