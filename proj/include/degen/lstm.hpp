#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "degen/dataset.hpp"
#include "degen/numerics.hpp"
#include "degen/rng.hpp"

namespace degen {

/// All trainable parameters. Every gate consumes the concatenation
/// [h_{t-1}, x_t, s], so the gate matrices are
/// hidden_dim x (hidden_dim + dyn_dim + static_dim):
///   f_t = sigmoid(W_f [h,x,s] + b_f)        forget
///   i_t = sigmoid(W_i [h,x,s] + b_i)        input
///   c~_t = tanh(W_c [h,x,s] + b_c)          candidate cell
///   o_t = sigmoid(W_o [h,x,s] + b_o)        output
///   c_t = f_t*c_{t-1} + i_t*c~_t
///   h_t = o_t*tanh(c_t)
/// and the head is y = W_y h_T + b_y (identity output, MSE-trained).
struct LstmParams {
  std::size_t hidden_dim = 0;
  std::size_t dyn_dim = 0;
  std::size_t static_dim = 0;
  std::size_t out_dim = 0;

  Matrix w_f, w_i, w_c, w_o;
  Vector b_f, b_i, b_c, b_o;
  Matrix w_y;
  Vector b_y;

  std::size_t concat_dim() const { return hidden_dim + dyn_dim + static_dim; }

  /// Xavier-uniform weights, zero biases except the forget-gate bias at 1.
  static LstmParams init(std::size_t hidden_dim, std::size_t dyn_dim,
                         std::size_t static_dim, std::size_t out_dim,
                         SeededRng& rng);

  static LstmParams zeros(std::size_t hidden_dim, std::size_t dyn_dim,
                          std::size_t static_dim, std::size_t out_dim);

  /// Mutable views of every parameter tensor, in a fixed order.
  std::vector<Vector*> tensors();
  std::vector<const Vector*> tensors() const;

  void validate() const;
};

/// Per-parameter gradients; shape-congruent with LstmParams.
using GradientSet = LstmParams;

struct LstmState {
  Vector h;
  Vector c;

  static LstmState zero(std::size_t hidden_dim) {
    return {Vector(hidden_dim, 0.0), Vector(hidden_dim, 0.0)};
  }
};

/// Gate activations of one step, kept for the backward pass.
struct GateValues {
  Vector f, i, o, c_tilde;
};

/// Everything the backward pass needs about one step.
struct StepCache {
  Vector z;  // [h_{t-1}, x_t, s]
  GateValues gates;
  Vector c;       // cell state after the step
  Vector tanh_c;  // tanh(c)
};

struct ForwardCache {
  std::vector<StepCache> steps;
  Vector h_final;
  Vector prediction;  // W_y h_T + b_y
};

/// One LSTM step from `state` on input x_t with statics s.
std::pair<LstmState, GateValues> cell_forward(const LstmParams& params,
                                              const Vector& x_t,
                                              const Vector& s,
                                              const LstmState& state);

/// Runs the cell over all input waves from a zero state and applies the
/// output head. The cache carries per-step values for BPTT.
ForwardCache forward_trajectory(const LstmParams& params,
                                const std::vector<Vector>& inputs,
                                const Vector& statics);

/// Mean over samples and output dimensions of squared error.
double loss_mse(const std::vector<Vector>& predictions,
                const std::vector<Vector>& targets);

/// Exact analytic gradients of the batch MSE with respect to every
/// parameter, by reverse accumulation through all steps.
GradientSet backward_bptt(const LstmParams& params,
                          const std::vector<ForwardCache>& caches,
                          const std::vector<Vector>& targets);

/// Compares backward_bptt with central finite differences over every
/// parameter of a small batch; returns the worst relative error
/// |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
double grad_check(const LstmParams& params,
                  const std::vector<TrainSample>& batch, double epsilon);

enum class Optimizer { sgd, adam };

struct TrainConfig {
  std::size_t hidden_dim = 32;
  double learning_rate = 1e-3;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  Optimizer optimizer = Optimizer::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double gradient_clip_norm = 5.0;
  std::uint64_t seed = 0;
  bool multi = true;
  bool use_features = true;

  void validate() const;
};

struct TrainResult {
  LstmParams params;
  std::vector<double> history;  // mean train MSE per epoch
  std::vector<std::string> target_names;
};

/// Mini-batch training on a normalized, windowed train set. Deterministic
/// given config.seed (initialization and shuffling both derive from it).
/// Throws TrainingDivergedError naming the epoch if the loss goes
/// non-finite.
TrainResult train(const TrainSet& data, const TrainConfig& config);

/// Forward + output head, then denormalization to raw score units.
/// Out-of-range raw predictions are reported unclamped.
Vector predict_next(const LstmParams& params, const std::vector<Vector>& inputs,
                    const Vector& statics, const NormalizationStats& stats,
                    const std::vector<std::string>& target_names);

struct EmbeddingMatrix {
  Matrix values;  // one row per trajectory, hidden_dim columns
  std::vector<std::string> participant_ids;
};

/// Final hidden state h_T per trajectory, in cohort order.
EmbeddingMatrix extract_embeddings(const LstmParams& params,
                                   const TrainSet& data);

}  // namespace degen
