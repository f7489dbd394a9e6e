#include "rul/lstm.hpp"

#include <cmath>

namespace rul {

void LstmSpec::validate() const {
  if (inputs == 0) throw ConfigError("lstm: input size must be positive");
  if (hidden == 0) throw ConfigError("lstm: hidden size must be positive");
}

nlohmann::json LstmSpec::to_json() const {
  return {{"inputs", inputs},
          {"hidden", hidden},
          {"gate_order", {"i", "f", "g", "o"}},
          {"head", "linear"}};
}

LstmSpec LstmSpec::from_json(const nlohmann::json& j) {
  LstmSpec s;
  s.inputs = j.at("inputs").get<std::size_t>();
  s.hidden = j.at("hidden").get<std::size_t>();
  if (j.at("gate_order") != nlohmann::json({"i", "f", "g", "o"}))
    throw ConfigError("lstm: unsupported gate order " + j.at("gate_order").dump());
  s.validate();
  return s;
}

LstmParams init_lstm(const LstmSpec& spec, SeededRng& rng) {
  spec.validate();
  const std::size_t h = spec.hidden;
  const std::size_t f = spec.inputs;
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(f));
  const double hid_bound = 1.0 / std::sqrt(static_cast<double>(h));
  TensorSet t;
  t.add("W", rng_uniform(rng, -in_bound, in_bound, 4 * h, f));
  t.add("U", rng_uniform(rng, -hid_bound, hid_bound, 4 * h, h));
  Matrix b(1, 4 * h);
  for (std::size_t j = h; j < 2 * h; ++j) b(0, j) = 1.0;
  t.add("b", std::move(b));
  t.add("head_w", rng_uniform(rng, -hid_bound, hid_bound, 1, h));
  t.add("head_b", Matrix(1, 1));
  return {spec, std::move(t)};
}

LstmParams make_lstm(const LstmSpec& spec, TensorSet tensors) {
  spec.validate();
  const std::size_t h = spec.hidden;
  const std::size_t f = spec.inputs;
  const std::pair<std::size_t, std::size_t> shapes[] = {
      {4 * h, f}, {4 * h, h}, {1, 4 * h}, {1, h}, {1, 1}};
  if (tensors.size() != 5) throw ShapeError("lstm: expected 5 tensors");
  for (std::size_t i = 0; i < 5; ++i) {
    if (tensors[i].rows() != shapes[i].first || tensors[i].cols() != shapes[i].second) {
      throw ShapeError("lstm: tensor '" + tensors.names[i] + "' has shape " +
                       tensors[i].shape_string());
    }
  }
  return {spec, std::move(tensors)};
}

namespace {

LstmStep cell_forward(const LstmParams& params, const Matrix& w_t, const Matrix& u_t,
                      const Matrix& x, const Matrix& h_prev, const Matrix& c_prev) {
  const std::size_t hidden = params.spec.hidden;
  const std::size_t batch = x.rows();
  if (x.cols() != params.spec.inputs || h_prev.rows() != batch || h_prev.cols() != hidden ||
      !c_prev.same_shape(h_prev)) {
    throw ShapeError("lstm_cell_forward: x" + x.shape_string() + " h" + h_prev.shape_string() +
                     " c" + c_prev.shape_string() + " for F=" +
                     std::to_string(params.spec.inputs) + " H=" + std::to_string(hidden));
  }
  LstmStep s;
  s.gates = Matrix(batch, 4 * hidden);
  matmul_add(x, w_t, s.gates);
  matmul_add(h_prev, u_t, s.gates);
  add_row_broadcast(s.gates, params.b());

  s.c = Matrix(batch, hidden);
  s.tanh_c = Matrix(batch, hidden);
  s.h = Matrix(batch, hidden);
  for (std::size_t r = 0; r < batch; ++r) {
    double* z = s.gates.row(r).data();
    for (std::size_t j = 0; j < hidden; ++j) {
      const double i = sigmoid(z[j]);
      const double f = sigmoid(z[hidden + j]);
      const double g = std::tanh(z[2 * hidden + j]);
      const double o = sigmoid(z[3 * hidden + j]);
      z[j] = i;
      z[hidden + j] = f;
      z[2 * hidden + j] = g;
      z[3 * hidden + j] = o;
      const double c = f * c_prev(r, j) + i * g;
      const double tc = std::tanh(c);
      s.c(r, j) = c;
      s.tanh_c(r, j) = tc;
      s.h(r, j) = o * tc;
    }
  }
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  return s;
}

}  // namespace

LstmStep lstm_cell_forward(const LstmParams& params, const Matrix& x, const Matrix& h_prev,
                           const Matrix& c_prev) {
  return cell_forward(params, params.W().transposed(), params.U().transposed(), x, h_prev, c_prev);
}

LstmForward lstm_sequence_forward(const LstmParams& params, const std::vector<Matrix>& steps) {
  if (steps.empty()) throw ShapeError("lstm_sequence_forward: empty window");
  const std::size_t batch = steps.front().rows();
  const std::size_t hidden = params.spec.hidden;
  const Matrix w_t = params.W().transposed();
  const Matrix u_t = params.U().transposed();

  LstmForward out;
  out.cache.steps.reserve(steps.size());
  Matrix h(batch, hidden);
  Matrix c(batch, hidden);
  for (const auto& x : steps) {
    if (x.rows() != batch) throw ShapeError("lstm_sequence_forward: ragged batch across steps");
    out.cache.steps.push_back(cell_forward(params, w_t, u_t, x, h, c));
    h = out.cache.steps.back().h;
    c = out.cache.steps.back().c;
  }
  Matrix y = matmul_a_bt(h, params.head_w());
  add_row_broadcast(y, params.head_b());
  out.predictions.assign(y.data().begin(), y.data().end());
  return out;
}

std::vector<Matrix> time_major(std::span<const Matrix* const> windows) {
  if (windows.empty()) return {};
  const std::size_t steps = windows.front()->rows();
  const std::size_t f = windows.front()->cols();
  std::vector<Matrix> out(steps, Matrix(windows.size(), f));
  for (std::size_t b = 0; b < windows.size(); ++b) {
    const Matrix& w = *windows[b];
    if (w.rows() != steps || w.cols() != f) {
      throw ShapeError("time_major: window " + w.shape_string() + " differs from " +
                       windows.front()->shape_string());
    }
    for (std::size_t t = 0; t < steps; ++t) {
      const auto src = w.row(t);
      std::copy(src.begin(), src.end(), out[t].row(b).begin());
    }
  }
  return out;
}

double lstm_predict(const LstmParams& params, const Matrix& window) {
  const Matrix* ptr = &window;
  return lstm_sequence_forward(params, time_major({&ptr, 1})).predictions[0];
}

GradientSet lstm_backward(const LstmParams& params, const LstmCache& cache,
                          std::span<const double> dloss_dpred) {
  if (cache.steps.empty()) throw ShapeError("lstm_backward: empty cache");
  const std::size_t hidden = params.spec.hidden;
  const auto& last = cache.steps.back();
  const std::size_t batch = last.h.rows();
  if (last.h.cols() != hidden || last.x.cols() != params.spec.inputs)
    throw ShapeError("lstm_backward: cache was produced by a different network shape");
  if (dloss_dpred.size() != batch) {
    throw ShapeError("lstm_backward: " + std::to_string(dloss_dpred.size()) +
                     " loss gradients for a batch of " + std::to_string(batch));
  }

  GradientSet grads = params.tensors.zeros_like();
  Matrix dy(batch, 1, std::vector<double>(dloss_dpred.begin(), dloss_dpred.end()));
  matmul_at_b_add(dy, last.h, grads[LstmParams::kHeadW]);
  column_sums_add(dy, grads[LstmParams::kHeadB]);

  Matrix dh = matmul(dy, params.head_w());  // batch x H
  Matrix dc(batch, hidden);
  Matrix dz(batch, 4 * hidden);
  for (std::size_t t = cache.steps.size(); t-- > 0;) {
    const auto& s = cache.steps[t];
    for (std::size_t r = 0; r < batch; ++r) {
      const double* gate = s.gates.row(r).data();
      double* d = dz.row(r).data();
      for (std::size_t j = 0; j < hidden; ++j) {
        const double i = gate[j];
        const double f = gate[hidden + j];
        const double g = gate[2 * hidden + j];
        const double o = gate[3 * hidden + j];
        const double tc = s.tanh_c(r, j);
        const double dh_rj = dh(r, j);
        const double dc_rj = dc(r, j) + dh_rj * o * (1.0 - tc * tc);
        d[j] = dc_rj * g * i * (1.0 - i);
        d[hidden + j] = dc_rj * s.c_prev(r, j) * f * (1.0 - f);
        d[2 * hidden + j] = dc_rj * i * (1.0 - g * g);
        d[3 * hidden + j] = dh_rj * tc * o * (1.0 - o);
        dc(r, j) = dc_rj * f;
      }
    }
    matmul_at_b_add(dz, s.x, grads[LstmParams::kW]);
    matmul_at_b_add(dz, s.h_prev, grads[LstmParams::kU]);
    column_sums_add(dz, grads[LstmParams::kB]);
    if (t > 0) dh = matmul(dz, params.U());
  }
  return grads;
}

}  // namespace rul
