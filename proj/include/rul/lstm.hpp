#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "rul/rng.hpp"
#include "rul/tensor_set.hpp"

namespace rul {

struct LstmSpec {
  std::size_t inputs = 0;
  std::size_t hidden = 64;

  void validate() const;
  nlohmann::json to_json() const;
  static LstmSpec from_json(const nlohmann::json& j);
};

/// Gate blocks are laid out [input, forget, cell, output] along the 4H axis.
inline constexpr const char* kGateOrder[] = {"i", "f", "g", "o"};

/// Single-layer LSTM with a linear head on the final hidden state.
///   W (4H x F), U (4H x H), b (1 x 4H), head_w (1 x H), head_b (1 x 1)
struct LstmParams {
  enum Index : std::size_t { kW = 0, kU = 1, kB = 2, kHeadW = 3, kHeadB = 4 };

  LstmSpec spec;
  TensorSet tensors;

  const Matrix& W() const { return tensors[kW]; }
  const Matrix& U() const { return tensors[kU]; }
  const Matrix& b() const { return tensors[kB]; }
  const Matrix& head_w() const { return tensors[kHeadW]; }
  const Matrix& head_b() const { return tensors[kHeadB]; }
};

/// W ~ U(+-1/sqrt(F)), U and head_w ~ U(+-1/sqrt(H)); biases zero except the
/// forget-gate block, which starts at 1.
LstmParams init_lstm(const LstmSpec& spec, SeededRng& rng);
LstmParams make_lstm(const LstmSpec& spec, TensorSet tensors);

struct LstmStep {
  Matrix x;       // batch x F
  Matrix h_prev;  // batch x H
  Matrix c_prev;
  Matrix gates;   // batch x 4H, post-activation
  Matrix c;
  Matrix tanh_c;
  Matrix h;
};

/// One cell update for a batch of rows. Fills every LstmStep field.
LstmStep lstm_cell_forward(const LstmParams& params, const Matrix& x, const Matrix& h_prev,
                           const Matrix& c_prev);

struct LstmCache {
  std::vector<LstmStep> steps;
};

struct LstmForward {
  std::vector<double> predictions;
  LstmCache cache;
};

/// Time-major batch: steps[t] is (batch x F). State starts at zero for every
/// call, so samples never share hidden or cell state.
LstmForward lstm_sequence_forward(const LstmParams& params, const std::vector<Matrix>& steps);
/// Single window (T x F, oldest first).
double lstm_predict(const LstmParams& params, const Matrix& window);
/// Stacks windows (each T x F) into time-major form.
std::vector<Matrix> time_major(std::span<const Matrix* const> windows);

/// Full backpropagation through time.
GradientSet lstm_backward(const LstmParams& params, const LstmCache& cache,
                          std::span<const double> dloss_dpred);

}  // namespace rul
