#include "degen/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "degen/errors.hpp"

namespace degen {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

LstmParams LstmParams::init(std::size_t hidden_dim, std::size_t dyn_dim,
                            std::size_t static_dim, std::size_t out_dim,
                            SeededRng& rng) {
  if (hidden_dim == 0 || dyn_dim == 0 || out_dim == 0) {
    throw ShapeError("LstmParams::init: hidden, dynamic and output dims must "
                     "be positive");
  }
  LstmParams p = zeros(hidden_dim, dyn_dim, static_dim, out_dim);
  const std::size_t z = p.concat_dim();
  p.w_f = xavier_init(hidden_dim, z, rng);
  p.w_i = xavier_init(hidden_dim, z, rng);
  p.w_c = xavier_init(hidden_dim, z, rng);
  p.w_o = xavier_init(hidden_dim, z, rng);
  p.w_y = xavier_init(out_dim, hidden_dim, rng);
  // forget-gate bias starts at 1 so early training does not wipe the cell
  std::fill(p.b_f.begin(), p.b_f.end(), 1.0);
  return p;
}

LstmParams LstmParams::zeros(std::size_t hidden_dim, std::size_t dyn_dim,
                             std::size_t static_dim, std::size_t out_dim) {
  LstmParams p;
  p.hidden_dim = hidden_dim;
  p.dyn_dim = dyn_dim;
  p.static_dim = static_dim;
  p.out_dim = out_dim;
  const std::size_t z = p.concat_dim();
  p.w_f = Matrix(hidden_dim, z);
  p.w_i = Matrix(hidden_dim, z);
  p.w_c = Matrix(hidden_dim, z);
  p.w_o = Matrix(hidden_dim, z);
  p.b_f = Vector(hidden_dim, 0.0);
  p.b_i = Vector(hidden_dim, 0.0);
  p.b_c = Vector(hidden_dim, 0.0);
  p.b_o = Vector(hidden_dim, 0.0);
  p.w_y = Matrix(out_dim, hidden_dim);
  p.b_y = Vector(out_dim, 0.0);
  return p;
}

std::vector<Vector*> LstmParams::tensors() {
  return {&w_f.values, &w_i.values, &w_c.values, &w_o.values, &w_y.values,
          &b_f,        &b_i,        &b_c,        &b_o,        &b_y};
}

std::vector<const Vector*> LstmParams::tensors() const {
  return {&w_f.values, &w_i.values, &w_c.values, &w_o.values, &w_y.values,
          &b_f,        &b_i,        &b_c,        &b_o,        &b_y};
}

void LstmParams::validate() const {
  const std::size_t z = concat_dim();
  auto check = [](bool ok, const char* what) {
    if (!ok) throw ShapeError(std::string("LstmParams: bad shape for ") + what);
  };
  for (const Matrix* w : {&w_f, &w_i, &w_c, &w_o}) {
    check(w->rows == hidden_dim && w->cols == z &&
              w->values.size() == w->rows * w->cols,
          "gate weight");
  }
  for (const Vector* b : {&b_f, &b_i, &b_c, &b_o}) {
    check(b->size() == hidden_dim, "gate bias");
  }
  check(w_y.rows == out_dim && w_y.cols == hidden_dim &&
            w_y.values.size() == out_dim * hidden_dim,
        "output weight");
  check(b_y.size() == out_dim, "output bias");
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

namespace {

StepCache step_impl(const LstmParams& p, const Vector& x_t, const Vector& s,
                    const LstmState& state, LstmState& next) {
  StepCache cache;
  cache.z.reserve(p.concat_dim());
  cache.z.insert(cache.z.end(), state.h.begin(), state.h.end());
  cache.z.insert(cache.z.end(), x_t.begin(), x_t.end());
  cache.z.insert(cache.z.end(), s.begin(), s.end());

  cache.gates.f = apply_activation(Activation::sigmoid,
                                   affine(p.w_f, cache.z, p.b_f));
  cache.gates.i = apply_activation(Activation::sigmoid,
                                   affine(p.w_i, cache.z, p.b_i));
  cache.gates.c_tilde =
      apply_activation(Activation::tanh, affine(p.w_c, cache.z, p.b_c));
  cache.gates.o = apply_activation(Activation::sigmoid,
                                   affine(p.w_o, cache.z, p.b_o));

  const std::size_t h = p.hidden_dim;
  cache.c.resize(h);
  cache.tanh_c.resize(h);
  next.h.resize(h);
  next.c.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    cache.c[j] = cache.gates.f[j] * state.c[j] +
                 cache.gates.i[j] * cache.gates.c_tilde[j];
    cache.tanh_c[j] = clamped_tanh(cache.c[j]);
    next.c[j] = cache.c[j];
    next.h[j] = cache.gates.o[j] * cache.tanh_c[j];
  }
  return cache;
}

void check_input_dims(const LstmParams& p, const Vector& x_t, const Vector& s,
                      const LstmState& state) {
  if (x_t.size() != p.dyn_dim) {
    throw ShapeError("cell_forward: input has " + std::to_string(x_t.size()) +
                     " entries, params expect dyn_dim " +
                     std::to_string(p.dyn_dim));
  }
  if (s.size() != p.static_dim) {
    throw ShapeError("cell_forward: statics have " + std::to_string(s.size()) +
                     " entries, params expect static_dim " +
                     std::to_string(p.static_dim));
  }
  if (state.h.size() != p.hidden_dim || state.c.size() != p.hidden_dim) {
    throw ShapeError("cell_forward: state size mismatch");
  }
}

}  // namespace

std::pair<LstmState, GateValues> cell_forward(const LstmParams& params,
                                              const Vector& x_t,
                                              const Vector& s,
                                              const LstmState& state) {
  check_input_dims(params, x_t, s, state);
  LstmState next;
  StepCache cache = step_impl(params, x_t, s, state, next);
  return {std::move(next), std::move(cache.gates)};
}

ForwardCache forward_trajectory(const LstmParams& params,
                                const std::vector<Vector>& inputs,
                                const Vector& statics) {
  if (inputs.empty()) {
    throw InvalidInputError("forward_trajectory: empty input sequence");
  }
  ForwardCache fc;
  fc.steps.reserve(inputs.size());
  LstmState state = LstmState::zero(params.hidden_dim);
  for (const auto& x : inputs) {
    check_input_dims(params, x, statics, state);
    LstmState next;
    fc.steps.push_back(step_impl(params, x, statics, state, next));
    state = std::move(next);
  }
  fc.h_final = state.h;
  fc.prediction = affine(params.w_y, fc.h_final, params.b_y);
  return fc;
}

// ---------------------------------------------------------------------------
// Loss and gradients
// ---------------------------------------------------------------------------

double loss_mse(const std::vector<Vector>& predictions,
                const std::vector<Vector>& targets) {
  if (predictions.size() != targets.size()) {
    throw ShapeError("loss_mse: " + std::to_string(predictions.size()) +
                     " predictions vs " + std::to_string(targets.size()) +
                     " targets");
  }
  if (predictions.empty()) throw ShapeError("loss_mse: empty batch");
  double sse = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < predictions.size(); ++n) {
    if (predictions[n].size() != targets[n].size()) {
      throw ShapeError("loss_mse: dimension mismatch at sample " +
                       std::to_string(n));
    }
    for (std::size_t d = 0; d < predictions[n].size(); ++d) {
      const double e = predictions[n][d] - targets[n][d];
      sse += e * e;
      ++count;
    }
  }
  return sse / static_cast<double>(count);
}

GradientSet backward_bptt(const LstmParams& params,
                          const std::vector<ForwardCache>& caches,
                          const std::vector<Vector>& targets) {
  if (caches.size() != targets.size() || caches.empty()) {
    throw ConsistencyError("backward_bptt: cache/target count mismatch");
  }
  const std::size_t h = params.hidden_dim;
  const std::size_t z = params.concat_dim();
  for (const auto& fc : caches) {
    if (fc.steps.empty() || fc.h_final.size() != h ||
        fc.steps.front().z.size() != z ||
        fc.prediction.size() != params.out_dim) {
      throw ConsistencyError(
          "backward_bptt: cached forward pass does not match params");
    }
  }

  GradientSet g = LstmParams::zeros(params.hidden_dim, params.dyn_dim,
                                    params.static_dim, params.out_dim);
  const double denom =
      static_cast<double>(caches.size()) * static_cast<double>(params.out_dim);

  Vector dh(h), dc(h), da_f(h), da_i(h), da_c(h), da_o(h);
  for (std::size_t n = 0; n < caches.size(); ++n) {
    const ForwardCache& fc = caches[n];
    if (targets[n].size() != params.out_dim) {
      throw ConsistencyError("backward_bptt: target dimension mismatch");
    }

    // output head
    Vector dy(params.out_dim);
    for (std::size_t d = 0; d < params.out_dim; ++d) {
      dy[d] = 2.0 * (fc.prediction[d] - targets[n][d]) / denom;
    }
    add_outer(g.w_y, dy, fc.h_final);
    for (std::size_t d = 0; d < params.out_dim; ++d) g.b_y[d] += dy[d];

    dh = matvec_transposed(params.w_y, dy);
    std::fill(dc.begin(), dc.end(), 0.0);

    for (std::size_t t = fc.steps.size(); t-- > 0;) {
      const StepCache& st = fc.steps[t];
      const Vector& f = st.gates.f;
      const Vector& i = st.gates.i;
      const Vector& o = st.gates.o;
      const Vector& ct = st.gates.c_tilde;
      // c_{t-1} lives in the previous step's cache; step 0 started from zero
      const Vector* c_prev = t > 0 ? &fc.steps[t - 1].c : nullptr;

      for (std::size_t j = 0; j < h; ++j) {
        const double d_o = dh[j] * st.tanh_c[j];
        da_o[j] = d_o * o[j] * (1.0 - o[j]);
        dc[j] += dh[j] * o[j] * (1.0 - st.tanh_c[j] * st.tanh_c[j]);
        const double cp = c_prev ? (*c_prev)[j] : 0.0;
        da_f[j] = dc[j] * cp * f[j] * (1.0 - f[j]);
        da_i[j] = dc[j] * ct[j] * i[j] * (1.0 - i[j]);
        da_c[j] = dc[j] * i[j] * (1.0 - ct[j] * ct[j]);
      }

      add_outer(g.w_f, da_f, st.z);
      add_outer(g.w_i, da_i, st.z);
      add_outer(g.w_c, da_c, st.z);
      add_outer(g.w_o, da_o, st.z);
      for (std::size_t j = 0; j < h; ++j) {
        g.b_f[j] += da_f[j];
        g.b_i[j] += da_i[j];
        g.b_c[j] += da_c[j];
        g.b_o[j] += da_o[j];
      }

      // back through the concatenation: only the h_{t-1} slice feeds the
      // previous step
      Vector dz_f = matvec_transposed(params.w_f, da_f);
      Vector dz_i = matvec_transposed(params.w_i, da_i);
      Vector dz_c = matvec_transposed(params.w_c, da_c);
      Vector dz_o = matvec_transposed(params.w_o, da_o);
      for (std::size_t j = 0; j < h; ++j) {
        dh[j] = dz_f[j] + dz_i[j] + dz_c[j] + dz_o[j];
        dc[j] *= f[j];
      }
    }
  }
  return g;
}

double grad_check(const LstmParams& params,
                  const std::vector<TrainSample>& batch, double epsilon) {
  if (batch.empty()) throw InvalidInputError("grad_check: empty batch");

  auto batch_loss = [&](const LstmParams& p) {
    std::vector<Vector> preds, targets;
    preds.reserve(batch.size());
    targets.reserve(batch.size());
    for (const auto& sample : batch) {
      preds.push_back(
          forward_trajectory(p, sample.inputs, sample.statics).prediction);
      targets.push_back(sample.target);
    }
    return loss_mse(preds, targets);
  };

  std::vector<ForwardCache> caches;
  std::vector<Vector> targets;
  for (const auto& sample : batch) {
    caches.push_back(forward_trajectory(params, sample.inputs, sample.statics));
    targets.push_back(sample.target);
  }
  GradientSet analytic = backward_bptt(params, caches, targets);

  LstmParams probe = params;
  auto probe_tensors = probe.tensors();
  auto analytic_tensors = analytic.tensors();

  double worst = 0.0;
  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    Vector& values = *probe_tensors[t];
    const Vector& grads = *analytic_tensors[t];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + epsilon;
      const double up = batch_loss(probe);
      values[j] = saved - epsilon;
      const double down = batch_loss(probe);
      values[j] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double denom =
          std::max({std::abs(grads[j]), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(grads[j] - numeric) / denom);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs == 0) throw InvalidInputError("TrainConfig: epochs must be >= 1");
  if (batch_size == 0)
    throw InvalidInputError("TrainConfig: batch_size must be >= 1");
  if (hidden_dim == 0)
    throw InvalidInputError("TrainConfig: hidden_dim must be >= 1");
  if (learning_rate < 0.0)
    throw InvalidInputError("TrainConfig: learning_rate must be >= 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw InvalidInputError("TrainConfig: adam betas must lie in (0,1)");
  }
  if (gradient_clip_norm <= 0.0)
    throw InvalidInputError("TrainConfig: gradient_clip_norm must be > 0");
}

TrainResult train(const TrainSet& data, const TrainConfig& config) {
  config.validate();
  if (data.samples.empty()) throw InvalidInputError("train: empty train set");
  if ((config.multi && data.out_dim != 2) ||
      (!config.multi && data.out_dim != 1)) {
    throw InvalidInputError("train: multi flag disagrees with train set");
  }
  if (config.use_features != (data.static_dim > 0)) {
    throw InvalidInputError("train: use_features disagrees with train set");
  }

  SeededRng root(config.seed);
  SeededRng init_rng = root.child("init");
  SeededRng shuffle_rng = root.child("shuffle");

  LstmParams params = LstmParams::init(config.hidden_dim, data.dyn_dim,
                                       data.static_dim, data.out_dim, init_rng);

  GradientSet m = LstmParams::zeros(config.hidden_dim, data.dyn_dim,
                                    data.static_dim, data.out_dim);
  GradientSet v = m;
  std::size_t adam_step = 0;

  const std::size_t n = data.samples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  TrainResult result;
  result.target_names = data.target_names;
  result.history.reserve(config.epochs);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_sse = 0.0;

    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      std::vector<ForwardCache> caches;
      std::vector<Vector> targets;
      caches.reserve(stop - start);
      targets.reserve(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        const TrainSample& sample = data.samples[order[k]];
        caches.push_back(
            forward_trajectory(params, sample.inputs, sample.statics));
        targets.push_back(sample.target);
        for (std::size_t d = 0; d < sample.target.size(); ++d) {
          const double e = caches.back().prediction[d] - sample.target[d];
          epoch_sse += e * e;
        }
      }
      if (!std::isfinite(epoch_sse)) {
        throw TrainingDivergedError(
            "training loss became non-finite at epoch " +
                std::to_string(epoch),
            epoch);
      }

      GradientSet grad = backward_bptt(params, caches, targets);

      // global-norm clip across every tensor
      double norm_sq = 0.0;
      for (const Vector* t : grad.tensors()) norm_sq += sum_of_squares(*t);
      const double norm = std::sqrt(norm_sq);
      const double scale =
          norm > config.gradient_clip_norm ? config.gradient_clip_norm / norm
                                           : 1.0;

      auto params_t = params.tensors();
      auto grad_t = grad.tensors();
      if (config.optimizer == Optimizer::adam) {
        ++adam_step;
        auto m_t = m.tensors();
        auto v_t = v.tensors();
        const double bc1 =
            1.0 - std::pow(config.adam_beta1, static_cast<double>(adam_step));
        const double bc2 =
            1.0 - std::pow(config.adam_beta2, static_cast<double>(adam_step));
        for (std::size_t t = 0; t < params_t.size(); ++t) {
          Vector& p = *params_t[t];
          Vector& mm = *m_t[t];
          Vector& vv = *v_t[t];
          const Vector& gg = *grad_t[t];
          for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = gg[j] * scale;
            mm[j] = config.adam_beta1 * mm[j] + (1.0 - config.adam_beta1) * gj;
            vv[j] =
                config.adam_beta2 * vv[j] + (1.0 - config.adam_beta2) * gj * gj;
            const double mhat = mm[j] / bc1;
            const double vhat = vv[j] / bc2;
            p[j] -= config.learning_rate * mhat /
                    (std::sqrt(vhat) + config.adam_eps);
          }
        }
      } else {
        for (std::size_t t = 0; t < params_t.size(); ++t) {
          Vector& p = *params_t[t];
          const Vector& gg = *grad_t[t];
          for (std::size_t j = 0; j < p.size(); ++j) {
            p[j] -= config.learning_rate * gg[j] * scale;
          }
        }
      }
    }

    const double epoch_loss =
        epoch_sse / (static_cast<double>(n) * static_cast<double>(data.out_dim));
    if (!std::isfinite(epoch_loss)) {
      throw TrainingDivergedError(
          "training loss became non-finite at epoch " + std::to_string(epoch),
          epoch);
    }
    result.history.push_back(epoch_loss);
  }

  result.params = std::move(params);
  return result;
}

// ---------------------------------------------------------------------------
// Prediction and embeddings
// ---------------------------------------------------------------------------

Vector predict_next(const LstmParams& params, const std::vector<Vector>& inputs,
                    const Vector& statics, const NormalizationStats& stats,
                    const std::vector<std::string>& target_names) {
  if (target_names.size() != params.out_dim) {
    throw ShapeError("predict_next: " + std::to_string(target_names.size()) +
                     " target names for out_dim " +
                     std::to_string(params.out_dim));
  }
  const ForwardCache fc = forward_trajectory(params, inputs, statics);
  Vector out(params.out_dim);
  for (std::size_t d = 0; d < params.out_dim; ++d) {
    out[d] = stats.denormalize_value(target_names[d], fc.prediction[d]);
  }
  return out;
}

EmbeddingMatrix extract_embeddings(const LstmParams& params,
                                   const TrainSet& data) {
  EmbeddingMatrix em;
  em.values = Matrix(data.samples.size(), params.hidden_dim);
  em.participant_ids.reserve(data.samples.size());
  for (std::size_t r = 0; r < data.samples.size(); ++r) {
    const auto& sample = data.samples[r];
    const ForwardCache fc =
        forward_trajectory(params, sample.inputs, sample.statics);
    for (std::size_t j = 0; j < params.hidden_dim; ++j) {
      em.values(r, j) = fc.h_final[j];
    }
    em.participant_ids.push_back(sample.participant_id);
  }
  return em;
}

}  // namespace degen
