#include "langprofile/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <numeric>

#include "langprofile/error.hpp"

namespace langprofile {

std::size_t impute_column_means(Matrix& m) {
  std::size_t replaced = 0;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < m.rows(); ++r)
      if (std::isfinite(m(r, c))) sum += m(r, c), ++n;
    const double fill = n ? sum / static_cast<double>(n) : 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r)
      if (!std::isfinite(m(r, c))) m(r, c) = fill, ++replaced;
  }
  return replaced;
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double mu = mean(x);
  double ss = 0;
  for (double v : x) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0 || syy <= 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Standardization standardize(const Matrix& m, std::span<const std::string> names) {
  Standardization out;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    const auto col = m.column(c);
    const double mu = mean(col);
    const double sd = sample_sd(col);
    const std::string name = c < names.size() ? names[c] : "col" + std::to_string(c);
    // relative test so that rounding noise in a constant column does not count as spread
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mu)))) {
      out.dropped.push_back(name);
      continue;
    }
    out.kept.push_back(c);
    out.names.push_back(name);
    out.means.push_back(mu);
    out.sds.push_back(sd);
  }
  if (out.kept.empty()) throw Error(ErrorCode::AllConstant, "every column is constant");
  out.data = Matrix(m.rows(), out.kept.size());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t j = 0; j < out.kept.size(); ++j)
      out.data(r, j) = (m(r, out.kept[j]) - out.means[j]) / out.sds[j];
  return out;
}

std::vector<std::size_t> prune_correlated(const Matrix& m, double threshold) {
  if (!(threshold > 0 && threshold <= 1)) throw std::invalid_argument("correlation threshold must be in (0, 1]");
  std::vector<std::vector<double>> cols(m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) cols[c] = m.column(c);
  std::vector<bool> dropped(m.cols(), false);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < m.cols(); ++i) {
    if (dropped[i]) continue;
    kept.push_back(i);
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (!dropped[j] && std::abs(pearson(cols[i], cols[j])) > threshold) dropped[j] = true;
  }
  return kept;
}

Matrix covariance(const Matrix& m) {
  const std::size_t n = m.rows(), p = m.cols();
  if (n < 2) throw Error(ErrorCode::DegenerateInput, "covariance needs at least two rows");
  std::vector<double> mu(p, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c) mu[c] += m(r, c);
  for (auto& v : mu) v /= static_cast<double>(n);
  Matrix cov(p, p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < p; ++i) {
      const double di = m(r, i) - mu[i];
      for (std::size_t j = i; j < p; ++j) cov(i, j) += di * (m(r, j) - mu[j]);
    }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) {
      cov(i, j) /= static_cast<double>(n - 1);
      cov(j, i) = cov(i, j);
    }
  return cov;
}

EigenDecomposition eig_sym(const Matrix& s) {
  const std::size_t n = s.rows();
  if (s.cols() != n) throw Error(ErrorCode::NotSymmetric, "matrix is not square");
  double max_abs = 0, norm2 = 0;
  for (double v : s.data()) {
    max_abs = std::max(max_abs, std::abs(v));
    norm2 += v * v;
  }
  const double sym_tol = 1e-10 * std::max(1.0, max_abs);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(s(i, j) - s(j, i)) > sym_tol) throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric");

  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (s(i, j) + s(j, i));
  Matrix v = Matrix::identity(n);

  const double tol = 1e-12 * std::sqrt(norm2);
  auto off_norm = [&] {
    double off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2 * a(i, j) * a(i, j);
    return std::sqrt(off);
  };

  EigenDecomposition out;
  bool converged = off_norm() <= tol;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150)
          t = 0.5 / theta;
        else
          t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        const double tau = sn / (1.0 + c);

        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double g = a(r, p), h = a(r, q);
          a(r, p) = a(p, r) = g - sn * (h + g * tau);
          a(r, q) = a(q, r) = h + sn * (g - h * tau);
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double g = v(r, p), h = v(r, q);
          v(r, p) = g - sn * (h + g * tau);
          v(r, q) = h + sn * (g - h * tau);
        }
      }
    }
    out.sweeps = sweep + 1;
    converged = off_norm() <= tol;
  }
  if (!converged) throw Error(ErrorCode::NoConvergence, "Jacobi iteration did not converge in 100 sweeps");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.values[j] = a(src, src);
    std::size_t arg = 0;
    for (std::size_t r = 1; r < n; ++r)
      if (std::abs(v(r, src)) > std::abs(v(arg, src))) arg = r;
    const double sign = v(arg, src) < 0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, j) = sign * v(r, src);
  }
  return out;
}

PcaModel pca_fit(const Matrix& standardized, std::span<const std::string> names, std::span<const double> means,
                 std::span<const double> sds) {
  auto eig = eig_sym(covariance(standardized));
  PcaModel m;
  m.retained_features.assign(names.begin(), names.end());
  if (m.retained_features.empty())
    for (std::size_t c = 0; c < standardized.cols(); ++c) m.retained_features.push_back("col" + std::to_string(c));
  m.means.assign(means.begin(), means.end());
  m.sds.assign(sds.begin(), sds.end());
  m.eigenvalues = std::move(eig.values);
  m.components = std::move(eig.vectors);
  return m;
}

Matrix pca_project(const PcaModel& model, const Matrix& standardized) { return standardized * model.components; }

ExplainedVariance explained_variance(std::span<const double> eigenvalues) {
  double total = 0;
  for (double l : eigenvalues) {
    if (l < 0) throw std::invalid_argument("eigenvalues must be non-negative");
    total += l;
  }
  return explained_variance(eigenvalues, total);
}

ExplainedVariance explained_variance(std::span<const double> eigenvalues, double total) {
  if (!(total > 0)) throw Error(ErrorCode::ZeroTotal, "total variance is zero");
  ExplainedVariance ev;
  double running = 0;
  for (double l : eigenvalues) {
    const double r = l / total * 100.0;
    running += r;
    ev.ratio_pct.push_back(r);
    ev.cumulative_pct.push_back(running);
  }
  return ev;
}

std::size_t kaiser_count(std::span<const double> eigenvalues) {
  return static_cast<std::size_t>(std::count_if(eigenvalues.begin(), eigenvalues.end(), [](double l) { return l > 1.0; }));
}

std::size_t elbow_count(std::span<const double> l) {
  if (l.size() < 3) throw Error(ErrorCode::TooFewComponents, "elbow needs at least three eigenvalues");
  std::size_t best = 1;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < l.size(); ++i) {
    const double d2 = l[i - 1] - 2 * l[i] + l[i + 1];
    if (d2 > best_val) best_val = d2, best = i;
  }
  return best + 1;
}

std::vector<ComponentLoadings> loadings_report(const PcaModel& model, std::size_t top_k, std::size_t components) {
  std::vector<ComponentLoadings> out;
  const std::size_t p = model.components.rows();
  for (std::size_t j = 0; j < std::min(components, model.components.cols()); ++j) {
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
      return std::abs(model.components(x, j)) > std::abs(model.components(y, j));
    });
    ComponentLoadings cl;
    cl.component = j;
    for (std::size_t t = 0; t < std::min(top_k, p); ++t)
      cl.top.emplace_back(model.retained_features[idx[t]], model.components(idx[t], j));
    out.push_back(std::move(cl));
  }
  return out;
}

std::vector<ComponentStats> component_stats(const Matrix& scores, std::size_t components) {
  std::vector<ComponentStats> out;
  for (std::size_t j = 0; j < std::min(components, scores.cols()); ++j) {
    const auto col = scores.column(j);
    ComponentStats s;
    s.mean = mean(col);
    s.sd = sample_sd(col);
    s.min = *std::min_element(col.begin(), col.end());
    s.max = *std::max_element(col.begin(), col.end());
    s.q25 = percentile(col, 25);
    s.median = percentile(col, 50);
    s.q75 = percentile(col, 75);
    out.push_back(s);
  }
  return out;
}

}  // namespace langprofile
