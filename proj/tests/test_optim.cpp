#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "rul/adam.hpp"
#include "rul/rng.hpp"

using namespace rul;

namespace {

TensorSet scalar_set(double v) {
  TensorSet t;
  t.add("theta", Matrix{{v}});
  return t;
}

// Reference Adam on one scalar, written directly from the update equations.
std::vector<double> reference_adam(double theta, const std::vector<double>& grads) {
  const double lr = 0.001, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m = 0, v = 0;
  std::vector<double> out;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    theta -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    out.push_back(theta);
  }
  return out;
}

}  // namespace

TEST_CASE("zero gradient leaves parameters unchanged") {
  auto params = scalar_set(1.5);
  auto state = adam_init(params);
  adam_step(state, params, scalar_set(0.0));
  CHECK(params[0](0, 0) == 1.5);
  CHECK(state.step == 1);
}

TEST_CASE("first step is -lr * g / (|g| + eps)") {
  auto params = scalar_set(0.0);
  auto state = adam_init(params);
  adam_step(state, params, scalar_set(0.5));
  CHECK(params[0](0, 0) == doctest::Approx(-0.001 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(params[0](0, 0) == doctest::Approx(-0.001).epsilon(1e-6));
}

TEST_CASE("matches the reference recurrence") {
  const std::vector<double> grads{0.3, 0.3, -1.2, 4.0, 0.01};
  const auto expected = reference_adam(2.0, grads);
  auto params = scalar_set(2.0);
  auto state = adam_init(params);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    adam_step(state, params, scalar_set(grads[i]));
    CHECK(params[0](0, 0) == doctest::Approx(expected[i]).epsilon(1e-14));
  }
  CHECK(state.step == grads.size());
}

TEST_CASE("update magnitude bounded under constant gradient") {
  for (double g : {1e-6, 0.3, 50.0, -7.0}) {
    auto params = scalar_set(0.0);
    auto state = adam_init(params);
    double prev = 0.0;
    for (int t = 0; t < 50; ++t) {
      adam_step(state, params, scalar_set(g));
      CHECK(std::abs(params[0](0, 0) - prev) <= 2 * 0.001);
      prev = params[0](0, 0);
    }
  }
}

TEST_CASE("non-finite gradient aborts without touching state") {
  TensorSet params;
  params.add("W", Matrix{{1.0, 2.0}});
  params.add("b", Matrix{{0.5}});
  auto state = adam_init(params);
  auto grads = params.zeros_like();
  grads[1](0, 0) = std::numeric_limits<double>::quiet_NaN();
  const auto before = params;
  CHECK_THROWS_WITH_AS(adam_step(state, params, grads), doctest::Contains("'b'"), NonFiniteError);
  CHECK(params == before);
  CHECK(state.step == 0);
}

TEST_CASE("shape mismatch is rejected") {
  auto params = scalar_set(1.0);
  auto state = adam_init(params);
  TensorSet wrong;
  wrong.add("theta", Matrix(2, 1));
  CHECK_THROWS_AS(adam_step(state, params, wrong), ShapeError);
}

TEST_CASE("state serialization round-trips and resumes identically") {
  SeededRng rng(9);
  TensorSet params;
  params.add("W", rng_uniform(rng, -1, 1, 3, 4));
  params.add("b", rng_uniform(rng, -1, 1, 1, 4));
  auto state = adam_init(params);
  auto grads_for = [&](int k) {
    auto g = params.zeros_like();
    SeededRng gr(100 + k);
    for (auto& t : g.tensors)
      for (double& v : t.data()) v = gr.uniform(-1, 1);
    return g;
  };
  for (int k = 0; k < 3; ++k) adam_step(state, params, grads_for(k));

  const auto restored_state = AdamState::from_json(nlohmann::json::parse(state.to_json().dump()));
  CHECK(restored_state == state);
  const auto restored_params = TensorSet::from_json(nlohmann::json::parse(params.to_json().dump()));
  CHECK(restored_params == params);

  auto s1 = state, s2 = restored_state;
  auto p1 = params, p2 = restored_params;
  for (int k = 3; k < 6; ++k) {
    adam_step(s1, p1, grads_for(k));
    adam_step(s2, p2, grads_for(k));
  }
  CHECK(p1 == p2);
}
