#include "degen/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "degen/errors.hpp"
#include "degen/rng.hpp"

namespace degen {

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

namespace {

// Dominant eigenpair of a symmetric PSD matrix by power iteration.
std::pair<double, Vector> power_iteration(const Matrix& m) {
  const std::size_t d = m.rows;
  // start from the largest-norm column; generically non-orthogonal to the
  // principal eigenvector and fully deterministic
  Vector v(d, 0.0);
  double best_norm = -1.0;
  for (std::size_t c = 0; c < d; ++c) {
    double norm = 0.0;
    for (std::size_t r = 0; r < d; ++r) norm += m(r, c) * m(r, c);
    if (norm > best_norm) {
      best_norm = norm;
      for (std::size_t r = 0; r < d; ++r) v[r] = m(r, c);
    }
  }
  double vnorm = std::sqrt(sum_of_squares(v));
  if (vnorm == 0.0) {
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = 1.0;
    vnorm = 1.0;
  }
  for (auto& x : v) x /= vnorm;

  double eigenvalue = 0.0;
  for (std::size_t iter = 0; iter < 10000; ++iter) {
    Vector next(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      const double* row = m.row(r);
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += row[c] * v[c];
      next[r] = acc;
    }
    const double norm = std::sqrt(sum_of_squares(next));
    if (norm == 0.0) return {0.0, v};
    for (auto& x : next) x /= norm;
    double delta = 0.0;
    for (std::size_t j = 0; j < d; ++j) delta += (next[j] - v[j]) * (next[j] - v[j]);
    v = std::move(next);
    eigenvalue = norm;
    if (delta < 1e-24) break;
  }
  return {eigenvalue, v};
}

}  // namespace

ProjectionResult pca_2d(const Matrix& z) {
  if (z.rows < 2) throw InvalidInputError("pca_2d: need at least 2 rows");
  const std::size_t n = z.rows;
  const std::size_t d = z.cols;

  Vector mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += z(r, c);
  }
  for (auto& x : mean) x /= static_cast<double>(n);

  Matrix centered(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) centered(r, c) = z(r, c) - mean[c];
  }

  Matrix cov(d, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t ci = 0; ci < d; ++ci) {
      const double xi = centered(r, ci);
      for (std::size_t cj = ci; cj < d; ++cj) {
        cov(ci, cj) += xi * centered(r, cj);
      }
    }
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t ci = 0; ci < d; ++ci) {
    for (std::size_t cj = ci; cj < d; ++cj) {
      cov(ci, cj) /= denom;
      cov(cj, ci) = cov(ci, cj);
    }
  }

  double total_variance = 0.0;
  for (std::size_t c = 0; c < d; ++c) total_variance += cov(c, c);
  if (total_variance < 1e-30) {
    throw DegenerateDataError("pca_2d: all rows identical (zero variance)");
  }

  Matrix deflated = cov;
  PcaDiagnostics diag;
  Matrix components(2, d);
  for (int comp = 0; comp < 2; ++comp) {
    auto [eigenvalue, v] = power_iteration(deflated);
    for (std::size_t c = 0; c < d; ++c) components(comp, c) = v[c];
    diag.explained_variance.push_back(std::max(0.0, eigenvalue) /
                                      total_variance);
    // deflate: cov -= lambda v v^T
    for (std::size_t ci = 0; ci < d; ++ci) {
      for (std::size_t cj = 0; cj < d; ++cj) {
        deflated(ci, cj) -= eigenvalue * v[ci] * v[cj];
      }
    }
  }

  ProjectionResult result;
  result.method = ProjectionMethod::pca;
  result.coords = Matrix(n, 2);
  for (std::size_t r = 0; r < n; ++r) {
    for (int comp = 0; comp < 2; ++comp) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        acc += centered(r, c) * components(comp, c);
      }
      result.coords(r, comp) = acc;
    }
  }
  result.pca = std::move(diag);
  return result;
}

// ---------------------------------------------------------------------------
// t-SNE
// ---------------------------------------------------------------------------

TsneConfig TsneConfig::for_rows(std::size_t n) {
  TsneConfig config;
  const double cap = (static_cast<double>(n) - 1.0) / 3.0;
  if (config.perplexity >= cap) {
    config.perplexity = std::max(2.0, cap - 1e-6);
  }
  return config;
}

void TsneConfig::validate(std::size_t n_rows) const {
  if (n_rows < 5) throw InvalidInputError("tsne_2d: need at least 5 rows");
  if (perplexity <= 1.0) {
    throw InvalidInputError("tsne_2d: perplexity must exceed 1");
  }
  if (perplexity >= (static_cast<double>(n_rows) - 1.0) / 3.0) {
    throw InvalidInputError(
        "tsne_2d: perplexity " + std::to_string(perplexity) +
        " infeasible for " + std::to_string(n_rows) +
        " rows (needs perplexity < (n-1)/3)");
  }
  if (iterations < early_exaggeration_iters) {
    throw InvalidInputError(
        "tsne_2d: iterations must cover the early-exaggeration phase");
  }
  if (learning_rate <= 0.0) {
    throw InvalidInputError("tsne_2d: learning rate must be positive");
  }
  if (early_exaggeration_factor < 1.0) {
    throw InvalidInputError("tsne_2d: exaggeration factor must be >= 1");
  }
}

namespace {

// Conditional distribution row: p_{j|i} with precision beta, plus its
// Shannon entropy (natural log).
double row_entropy(const Vector& sq_dists, double beta, std::size_t self,
                   Vector& p_row) {
  double sum_p = 0.0;
  double sum_pd = 0.0;
  const std::size_t n = sq_dists.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (j == self) {
      p_row[j] = 0.0;
      continue;
    }
    const double p = std::exp(-beta * sq_dists[j]);
    p_row[j] = p;
    sum_p += p;
    sum_pd += p * sq_dists[j];
  }
  if (sum_p <= 0.0) return -1.0;  // all mass underflowed
  // H = log(sum_p) + beta * E[d]
  const double entropy = std::log(sum_p) + beta * sum_pd / sum_p;
  for (std::size_t j = 0; j < n; ++j) p_row[j] /= sum_p;
  return entropy;
}

}  // namespace

ProjectionResult tsne_2d(const Matrix& z, const TsneConfig& config) {
  config.validate(z.rows);
  if (!all_finite(z.values)) {
    throw InvalidInputError("tsne_2d: non-finite embedding entries");
  }
  const std::size_t n = z.rows;
  const std::size_t d = z.cols;

  // pairwise squared distances in the input space
  Matrix sq(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0.0;
      const double* ri = z.row(i);
      const double* rj = z.row(j);
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = ri[c] - rj[c];
        acc += diff * diff;
      }
      sq(i, j) = acc;
      sq(j, i) = acc;
    }
  }

  // per-point bandwidth: binary search beta until the row entropy matches
  // log(perplexity)
  const double target_entropy = std::log(config.perplexity);
  Matrix conditional(n, n);
  double max_residual = 0.0;
  Vector dists(n), p_row(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) dists[j] = sq(i, j);
    double beta = 1.0;
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double entropy = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      entropy = row_entropy(dists, beta, i, p_row);
      const double diff = entropy - target_entropy;
      if (std::abs(diff) < 1e-9) break;
      if (diff > 0.0) {  // too spread out -> sharpen
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (lo + hi);
      } else {
        hi = beta;
        beta = lo > 0.0 ? 0.5 * (lo + hi) : beta * 0.5;
      }
    }
    max_residual =
        std::max(max_residual, std::abs(std::exp(entropy) - config.perplexity));
    for (std::size_t j = 0; j < n; ++j) conditional(i, j) = p_row[j];
  }

  // symmetrized joint distribution, floor keeps KL finite
  Matrix p(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      p(i, j) = (conditional(i, j) + conditional(j, i)) /
                (2.0 * static_cast<double>(n));
    }
  }
  double p_mass = 0.0;
  double p_asym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      p_mass += p(i, j);
      p_asym = std::max(p_asym, std::abs(p(i, j) - p(j, i)));
    }
  }

  // seeded Gaussian init, sigma 1e-4
  SeededRng rng(config.seed);
  Matrix y(n, 2);
  for (auto& v : y.values) v = rng.normal(0.0, 1e-4);

  Matrix velocity(n, 2);
  Matrix q(n, n);
  Matrix gradient(n, 2);

  auto compute_q = [&](double& inv_mass_out) {
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      q(i, i) = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y(i, 0) - y(j, 0);
        const double dy = y(i, 1) - y(j, 1);
        const double w = 1.0 / (1.0 + dx * dx + dy * dy);
        q(i, j) = w;
        q(j, i) = w;
        mass += 2.0 * w;
      }
    }
    inv_mass_out = 1.0 / mass;
  };

  auto kl_now = [&]() {
    double inv_mass = 0.0;
    compute_q(inv_mass);
    double kl = 0.0;
    for (std::size_t idx = 0; idx < p.values.size(); ++idx) {
      const double pij = p.values[idx];
      if (pij > 0.0) {
        const double qij = std::max(q.values[idx] * inv_mass, 1e-300);
        kl += pij * std::log(pij / qij);
      }
    }
    return kl;
  };

  TsneDiagnostics diag;
  diag.p_total_mass = p_mass;
  diag.p_max_asymmetry = p_asym;
  diag.max_perplexity_residual = max_residual;
  diag.initial_kl = kl_now();

  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const bool exaggerate = iter < config.early_exaggeration_iters;
    const double ex = exaggerate ? config.early_exaggeration_factor : 1.0;
    const double momentum = iter < config.early_exaggeration_iters
                                ? config.momentum_initial
                                : config.momentum_final;

    double inv_mass = 0.0;
    compute_q(inv_mass);

    for (std::size_t i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = q(i, j);
        const double coeff = (ex * p(i, j) - w * inv_mass) * w;
        gx += coeff * (y(i, 0) - y(j, 0));
        gy += coeff * (y(i, 1) - y(j, 1));
      }
      gradient(i, 0) = 4.0 * gx;
      gradient(i, 1) = 4.0 * gy;
    }

    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      velocity(i, 0) =
          momentum * velocity(i, 0) - config.learning_rate * gradient(i, 0);
      velocity(i, 1) =
          momentum * velocity(i, 1) - config.learning_rate * gradient(i, 1);
      y(i, 0) += velocity(i, 0);
      y(i, 1) += velocity(i, 1);
      mean_x += y(i, 0);
      mean_y += y(i, 1);
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      y(i, 0) -= mean_x;
      y(i, 1) -= mean_y;
    }

    if (!all_finite(y.values)) {
      throw NumericalFailureError(
          "tsne_2d: non-finite coordinates at iteration " +
              std::to_string(iter),
          iter);
    }
  }

  diag.final_kl = kl_now();
  diag.iterations = config.iterations;

  ProjectionResult result;
  result.method = ProjectionMethod::tsne;
  result.coords = std::move(y);
  result.tsne = diag;
  return result;
}

}  // namespace degen
