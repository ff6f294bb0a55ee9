#pragma once

// Standardization, correlation pruning, symmetric eigendecomposition and PCA.
// Every variance and covariance uses the sample (n-1) denominator, and sums
// run left to right in row order.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "langprofile/matrix.hpp"

namespace langprofile {

/// Replaces NaN cells with their column mean; returns the number replaced.
/// A column with no finite values is filled with 0.
std::size_t impute_column_means(Matrix& m);

double mean(std::span<const double> x);
double sample_sd(std::span<const double> x);
double pearson(std::span<const double> x, std::span<const double> y);

/// Percentile with linear interpolation between order statistics, p in [0, 100].
double percentile(std::vector<double> values, double p);

struct Standardization {
  Matrix data;                       // standardized kept columns
  std::vector<std::string> names;    // kept column names
  std::vector<std::size_t> kept;     // indices into the input columns
  std::vector<double> means, sds;    // per kept column
  std::vector<std::string> dropped;  // constant columns
};

/// Centres and scales each column to sample sd 1. Constant columns are
/// dropped; throws AllConstant if nothing is left.
Standardization standardize(const Matrix& m, std::span<const std::string> names);

/// Greedy scan in column order: a column is dropped when its |Pearson r| with
/// an earlier retained column exceeds `threshold`. Returns retained indices.
std::vector<std::size_t> prune_correlated(const Matrix& m, double threshold);

Matrix covariance(const Matrix& m);

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]
  int sweeps = 0;
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
/// 1e-12 times the norm of `s` (at most 100 sweeps). Each eigenvector is
/// signed so that its largest-magnitude entry is positive.
EigenDecomposition eig_sym(const Matrix& s);

struct PcaModel {
  std::vector<std::string> retained_features;
  std::vector<double> means, sds;  // standardization of the retained features
  std::vector<double> eigenvalues;
  Matrix components;  // features x components, orthonormal columns
};

/// Eigendecomposition of the covariance of already-standardized data.
PcaModel pca_fit(const Matrix& standardized, std::span<const std::string> names = {},
                 std::span<const double> means = {}, std::span<const double> sds = {});
Matrix pca_project(const PcaModel& model, const Matrix& standardized);

struct ExplainedVariance {
  std::vector<double> ratio_pct;
  std::vector<double> cumulative_pct;
};

ExplainedVariance explained_variance(std::span<const double> eigenvalues);
/// Same, with percentages taken against an externally known total variance.
ExplainedVariance explained_variance(std::span<const double> eigenvalues, double total);

std::size_t kaiser_count(std::span<const double> eigenvalues);
/// 1-based index i maximizing l[i-1] - 2 l[i] + l[i+1].
std::size_t elbow_count(std::span<const double> eigenvalues);

struct ComponentLoadings {
  std::size_t component = 0;  // 0-based
  std::vector<std::pair<std::string, double>> top;  // by |loading|, descending
};

std::vector<ComponentLoadings> loadings_report(const PcaModel& model, std::size_t top_k,
                                               std::size_t components = 5);

struct ComponentStats {
  double mean = 0, sd = 0, min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
};

std::vector<ComponentStats> component_stats(const Matrix& scores, std::size_t components);

}  // namespace langprofile
