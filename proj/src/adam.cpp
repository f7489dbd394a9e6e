#include "rul/adam.hpp"

#include <cmath>

namespace rul {

AdamState adam_init(const TensorSet& params, const AdamHyperparams& hyper) {
  AdamState s;
  s.hyper = hyper;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  return s;
}

void adam_step(AdamState& state, TensorSet& params, const GradientSet& grads) {
  params.require_congruent(grads, "adam_step");
  params.require_congruent(state.m, "adam_step (state)");
  if (const auto bad = grads.first_non_finite(); !bad.empty())
    throw NonFiniteError("adam_step: non-finite gradient in tensor '" + bad + "'");

  const auto& h = state.hyper;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& theta = params[k].data();
    auto& m = state.m[k].data();
    auto& v = state.v[k].data();
    const auto& g = grads[k].data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

nlohmann::json AdamState::to_json() const {
  return {{"lr", hyper.lr},     {"beta1", hyper.beta1}, {"beta2", hyper.beta2},
          {"eps", hyper.eps},   {"step", step},         {"m", m.to_json()},
          {"v", v.to_json()}};
}

AdamState AdamState::from_json(const nlohmann::json& j) {
  AdamState s;
  s.hyper.lr = j.at("lr").get<double>();
  s.hyper.beta1 = j.at("beta1").get<double>();
  s.hyper.beta2 = j.at("beta2").get<double>();
  s.hyper.eps = j.at("eps").get<double>();
  s.step = j.at("step").get<std::uint64_t>();
  s.m = TensorSet::from_json(j.at("m"));
  s.v = TensorSet::from_json(j.at("v"));
  return s;
}

}  // namespace rul
