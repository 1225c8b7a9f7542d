#pragma once

#include <cstddef>
#include <vector>

#include "degen/numerics.hpp"
#include "degen/rng.hpp"

namespace degen {

struct ClusterModel {
  std::size_t k = 0;
  Matrix centroids;  // k x dim
  std::vector<std::size_t> assignments;
  double inertia = 0.0;  // sum of squared distances to assigned centroids
  std::size_t iterations_run = 0;
  /// Inertia measured after each assignment/update cycle; non-increasing
  /// by construction of Lloyd's algorithm, and verified at every step.
  std::vector<double> inertia_trace;
};

/// Lloyd's algorithm with initial centroids drawn as k distinct rows of Z.
/// Iterates nearest-centroid assignment (squared Euclidean) and mean
/// updates until assignments stabilize or max_iter. An emptied centroid is
/// reseeded at the point farthest from its assigned centroid.
ClusterModel kmeans(const Matrix& z, std::size_t k, SeededRng& rng,
                    std::size_t max_iter = 100);

/// Best of `restarts` independent kmeans runs by inertia.
ClusterModel kmeans_restarts(const Matrix& z, std::size_t k, SeededRng& rng,
                             std::size_t restarts, std::size_t max_iter = 100);

/// Mean silhouette over points with plain Euclidean distances; singleton
/// clusters contribute 0. Requires at least two clusters and one cluster
/// with two or more members.
double silhouette(const Matrix& z, const std::vector<std::size_t>& assignments);

struct KSelectionReport {
  std::vector<std::size_t> candidates;
  std::vector<double> scores;  // silhouette per candidate
  std::size_t chosen_k = 0;    // argmax silhouette, ties toward smaller k
};

/// For each k in [k_min, k_max]: best-of-restarts kmeans, then silhouette.
KSelectionReport select_k(const Matrix& z, std::size_t k_min,
                          std::size_t k_max, SeededRng& rng,
                          std::size_t restarts = 10,
                          std::size_t max_iter = 100);

/// Adjusted Rand Index between two labelings of the same points
/// (standard contingency-table formula; 1 means identical partitions).
double adjusted_rand_index(const std::vector<std::size_t>& a,
                           const std::vector<std::size_t>& b);

}  // namespace degen
