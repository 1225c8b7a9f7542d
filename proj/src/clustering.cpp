#include "degen/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "degen/errors.hpp"

namespace degen {

namespace {

double sq_dist(const double* a, const double* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double d = a[j] - b[j];
    acc += d * d;
  }
  return acc;
}

double inertia_of(const Matrix& z, const Matrix& centroids,
                  const std::vector<std::size_t>& assignments) {
  double total = 0.0;
  for (std::size_t r = 0; r < z.rows; ++r) {
    total += sq_dist(z.row(r), centroids.row(assignments[r]), z.cols);
  }
  return total;
}

}  // namespace

ClusterModel kmeans(const Matrix& z, std::size_t k, SeededRng& rng,
                    std::size_t max_iter) {
  if (k == 0) throw InvalidInputError("kmeans: k must be positive");
  if (k > z.rows) {
    throw InvalidInputError("kmeans: k=" + std::to_string(k) + " exceeds " +
                            std::to_string(z.rows) + " rows");
  }
  if (!all_finite(z.values)) {
    throw InvalidInputError("kmeans: non-finite embedding entries");
  }

  const std::size_t n = z.rows;
  const std::size_t dim = z.cols;

  // initial centroids: k distinct rows drawn at random
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  rng.shuffle(pool);
  Matrix centroids(k, dim);
  for (std::size_t c = 0; c < k; ++c) {
    const double* src = z.row(pool[c]);
    std::copy(src, src + dim, centroids.row(c));
  }

  std::vector<std::size_t> assignments(n, 0);
  std::vector<std::size_t> previous;
  ClusterModel model;
  model.k = k;

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // assignment step
    for (std::size_t r = 0; r < n; ++r) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(z.row(r), centroids.row(c), dim);
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      assignments[r] = best_c;
    }
    model.iterations_run = iter + 1;

    if (iter > 0 && assignments == previous) break;
    previous = assignments;

    // mean update
    Matrix sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t c = assignments[r];
      ++counts[c];
      const double* src = z.row(r);
      double* dst = sums.row(c);
      for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      double* dst = centroids.row(c);
      const double* src = sums.row(c);
      for (std::size_t j = 0; j < dim; ++j) {
        dst[j] = src[j] / static_cast<double>(counts[c]);
      }
    }

    // reseed any emptied centroid at the point farthest from its assigned
    // centroid; the cluster has no members, so inertia is unchanged
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      double worst = -1.0;
      std::size_t worst_r = 0;
      for (std::size_t r = 0; r < n; ++r) {
        const double d =
            sq_dist(z.row(r), centroids.row(assignments[r]), dim);
        if (d > worst) {
          worst = d;
          worst_r = r;
        }
      }
      const double* src = z.row(worst_r);
      std::copy(src, src + dim, centroids.row(c));
    }

    const double inertia_now = inertia_of(z, centroids, assignments);
    if (!model.inertia_trace.empty() &&
        inertia_now > model.inertia_trace.back() +
                          1e-9 * std::max(1.0, model.inertia_trace.back())) {
      throw NumericalFailureError(
          "kmeans inertia increased between iterations", iter);
    }
    model.inertia_trace.push_back(inertia_now);
  }

  model.centroids = std::move(centroids);
  model.assignments = std::move(assignments);
  model.inertia = inertia_of(z, model.centroids, model.assignments);
  return model;
}

ClusterModel kmeans_restarts(const Matrix& z, std::size_t k, SeededRng& rng,
                             std::size_t restarts, std::size_t max_iter) {
  if (restarts == 0) {
    throw InvalidInputError("kmeans_restarts: need at least one restart");
  }
  ClusterModel best;
  bool have = false;
  for (std::size_t r = 0; r < restarts; ++r) {
    ClusterModel run = kmeans(z, k, rng, max_iter);
    if (!have || run.inertia < best.inertia) {
      best = std::move(run);
      have = true;
    }
  }
  return best;
}

double silhouette(const Matrix& z,
                  const std::vector<std::size_t>& assignments) {
  if (assignments.size() != z.rows) {
    throw ShapeError("silhouette: assignment count mismatch");
  }
  const std::size_t n = z.rows;
  std::size_t k = 0;
  for (auto a : assignments) k = std::max(k, a + 1);
  std::vector<std::size_t> counts(k, 0);
  for (auto a : assignments) ++counts[a];
  std::size_t populated = 0;
  std::size_t multi_member = 0;
  for (auto c : counts) {
    if (c > 0) ++populated;
    if (c > 1) ++multi_member;
  }
  if (populated < 2) {
    throw UndefinedMetricError("silhouette needs at least 2 clusters");
  }
  if (multi_member == 0) {
    throw UndefinedMetricError(
        "silhouette needs a cluster with at least 2 members");
  }

  double total = 0.0;
  std::vector<double> mean_dist(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[assignments[i]] == 1) continue;  // singleton contributes 0

    std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      mean_dist[assignments[j]] +=
          std::sqrt(sq_dist(z.row(i), z.row(j), z.cols));
    }
    const std::size_t own = assignments[i];
    const double a = mean_dist[own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || counts[c] == 0) continue;
      b = std::min(b, mean_dist[c] / static_cast<double>(counts[c]));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

KSelectionReport select_k(const Matrix& z, std::size_t k_min,
                          std::size_t k_max, SeededRng& rng,
                          std::size_t restarts, std::size_t max_iter) {
  if (k_min < 2 || k_min > k_max || k_max + 1 > z.rows) {
    throw InvalidInputError(
        "select_k: need 2 <= k_min <= k_max <= rows-1, got [" +
        std::to_string(k_min) + "," + std::to_string(k_max) + "] for " +
        std::to_string(z.rows) + " rows");
  }
  KSelectionReport report;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    ClusterModel model = kmeans_restarts(z, k, rng, restarts, max_iter);
    report.candidates.push_back(k);
    report.scores.push_back(silhouette(z, model.assignments));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < report.scores.size(); ++i) {
    if (report.scores[i] > report.scores[best]) best = i;
  }
  report.chosen_k = report.candidates[best];
  return report;
}

double adjusted_rand_index(const std::vector<std::size_t>& a,
                           const std::vector<std::size_t>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw ShapeError("adjusted_rand_index: label vectors must match and be "
                     "non-empty");
  }
  const double n = static_cast<double>(a.size());
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> count_a, count_b;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    count_a[a[i]] += 1.0;
    count_b[b[i]] += 1.0;
  }
  auto comb2 = [](double m) { return m * (m - 1.0) / 2.0; };
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, m] : joint) sum_joint += comb2(m);
  for (const auto& [key, m] : count_a) sum_a += comb2(m);
  for (const auto& [key, m] : count_b) sum_b += comb2(m);
  const double total = comb2(n);
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (sum_joint - expected) / (max_index - expected);
}

}  // namespace degen
