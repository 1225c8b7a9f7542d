#pragma once

#include <cstdint>
#include <optional>

#include "degen/numerics.hpp"

namespace degen {

enum class ProjectionMethod { pca, tsne };

struct PcaDiagnostics {
  Vector explained_variance;  // fraction of total variance per component
};

struct TsneDiagnostics {
  double initial_kl = 0.0;  // KL against un-exaggerated P at iteration 0
  double final_kl = 0.0;
  std::size_t iterations = 0;
  double p_total_mass = 0.0;
  double p_max_asymmetry = 0.0;
  double max_perplexity_residual = 0.0;  // worst |achieved - target|
};

struct ProjectionResult {
  Matrix coords;  // rows x 2, aligned to the input rows
  ProjectionMethod method = ProjectionMethod::pca;
  std::optional<PcaDiagnostics> pca;
  std::optional<TsneDiagnostics> tsne;
};

/// Centers columns and projects onto the top-2 eigenvectors of the
/// covariance (power iteration with deflation). Throws DegenerateDataError
/// when all rows are identical.
ProjectionResult pca_2d(const Matrix& z);

struct TsneConfig {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration_factor = 12.0;
  std::size_t early_exaggeration_iters = 250;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;  // switches at early_exaggeration_iters
  std::uint64_t seed = 0;

  /// Caps perplexity at (n-1)/3 so the bandwidth search stays feasible.
  static TsneConfig for_rows(std::size_t n);

  void validate(std::size_t n_rows) const;
};

/// Exact (dense) t-SNE: per-point Gaussian bandwidths by binary search on
/// the perplexity target, symmetrized joint P, Student-t low-dimensional
/// affinities, gradient descent with momentum and early exaggeration.
/// Deterministic given config.seed.
ProjectionResult tsne_2d(const Matrix& z, const TsneConfig& config);

}  // namespace degen
