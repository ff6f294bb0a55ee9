#pragma once

// Clustering over PC scores: k-means with silhouette model selection, Ward
// and DBSCAN cross-checks, boundary and outlier detection, agreement metrics.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "langprofile/matrix.hpp"

namespace langprofile {

/// Sub-seed for restart `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

struct ClusterResult {
  std::size_t k = 0;
  std::vector<int> assignments;
  Matrix centroids;  // k x dims
  double inertia = 0;
  std::uint64_t seed = 0;
  std::size_t n_init = 0;
  std::size_t iterations = 0;           // Lloyd iterations of the winning restart
  std::vector<double> inertia_history;  // per Lloyd iteration of the winning restart
};

/// k-means++ seeding, Lloyd iterations to an assignment fixpoint (at most
/// `max_iter`), best of `n_init` restarts by inertia. Throws DegenerateInput
/// when there are fewer rows than clusters.
ClusterResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t n_init = 32,
                     std::size_t max_iter = 300);

/// Per-point silhouette values. Singletons score 0, as do points with a = b = 0.
/// Throws SingleCluster when fewer than two labels are present.
std::vector<double> silhouette_samples(const Matrix& points, std::span<const int> assignments);
double silhouette(const Matrix& points, std::span<const int> assignments);

struct SweepEntry {
  std::size_t k = 0;
  double silhouette = 0;
  double inertia = 0;
};

/// Runs kmeans with the same seed for each k in [k_min, k_max].
std::vector<SweepEntry> silhouette_sweep(const Matrix& points, std::size_t k_min, std::size_t k_max,
                                         std::uint64_t seed, std::size_t n_init = 32);

struct WardMerge {
  std::size_t a = 0, b = 0;  // cluster ids, each the smallest row index in the cluster
  double cost = 0;           // increase in within-cluster sum of squares
  std::size_t size = 0;      // size of the merged cluster
};

struct WardResult {
  std::vector<int> assignments;  // labels numbered by first appearance in row order
  std::vector<WardMerge> merges;
};

WardResult ward_linkage(const Matrix& points, std::size_t k);

/// Labels clusters 0, 1, ... in discovery order; noise is -1. A point's
/// neighbourhood includes itself and uses distance <= eps.
std::vector<int> dbscan(const Matrix& points, double eps, std::size_t min_pts);

struct BoundaryReport {
  std::vector<std::size_t> indices;
  double threshold = 0;
  double percentile = 0;
  std::vector<double> dim_mean, dim_sd;  // per dimension over flagged rows
  double pc1_mean = 0, pc1_sd = 0;
  double outcome_ratio = 0;   // SLI share among flagged rows with a known outcome; NaN if none
  std::vector<double> deltas;  // per row
};

/// `outcomes`: 1 = SLI, 0 = TD, -1 = unknown; may be empty.
BoundaryReport boundary_cases(const Matrix& points, const Matrix& centroids, std::span<const int> outcomes = {},
                              double percentile = 5.0);

/// Rows farther from their centroid than mean + 3 sd of their cluster's distances.
std::vector<std::size_t> detect_outliers(const Matrix& points, const Matrix& centroids,
                                         std::span<const int> assignments);

double ari(std::span<const int> a, std::span<const int> b);
double ami(std::span<const int> a, std::span<const int> b);
double best_mapping_accuracy(std::span<const int> a, std::span<const int> b);

}  // namespace langprofile
