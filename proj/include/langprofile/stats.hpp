#pragma once

// Per-cluster clinical summaries and two-group effect statistics.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "langprofile/matrix.hpp"

namespace langprofile {

struct WelchResult {
  double t = 0;
  double df = 0;
  double p_value = 1;  // two-sided
};

/// Throws TinyCluster when either group has fewer than two values.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// (mean(a) - mean(b)) / pooled sd; 0 when both groups are constant and equal.
double cohens_d(std::span<const double> a, std::span<const double> b);

struct ClusterProfile {
  int cluster = 0;
  std::size_t size = 0;
  std::vector<double> pc_means;  // first three components (fewer if unavailable)
  double y_ratio = 0;            // SLI share among members with a known outcome; NaN if none
};

/// `outcomes`: 1 = SLI, 0 = TD, -1 = unknown.
std::vector<ClusterProfile> cluster_profiles(std::span<const int> assignments, const Matrix& scores,
                                             std::span<const int> outcomes);

struct EffectStats {
  std::string feature;
  int cluster_a = 0, cluster_b = 1;
  double mean_a = 0, mean_b = 0;
  double t = 0, df = 0;
  double p_value = 1;
  double cohens_d = 0;
};

/// Compares every requested feature column between each pair of clusters.
std::vector<EffectStats> compare_features(const Matrix& m, std::span<const std::string> names,
                                          std::span<const int> assignments, std::span<const std::string> features);

}  // namespace langprofile
