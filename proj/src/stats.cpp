#include "langprofile/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "langprofile/error.hpp"
#include "langprofile/numerics.hpp"

namespace langprofile {
namespace {

void require_two(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw Error(ErrorCode::TinyCluster, "groups of size " + std::to_string(a.size()) + " and " +
                                            std::to_string(b.size()) + " are too small for a two-sample test");
}

double variance(std::span<const double> x) {
  const double sd = sample_sd(x);
  return sd * sd;
}

}  // namespace

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  require_two(a, b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = variance(a) / na, vb = variance(b) / nb;
  const double diff = mean(a) - mean(b);
  WelchResult r;
  const double se2 = va + vb;
  if (se2 == 0) {
    r.df = na + nb - 2;
    if (diff == 0) return r;
    r.t = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p_value = 0;
    return r;
  }
  r.t = diff / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (na - 1) + vb * vb / (nb - 1));
  const boost::math::students_t dist(r.df);
  r.p_value = std::clamp(2 * boost::math::cdf(dist, -std::abs(r.t)), 0.0, 1.0);
  return r;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  require_two(a, b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double pooled = std::sqrt(((na - 1) * variance(a) + (nb - 1) * variance(b)) / (na + nb - 2));
  const double diff = mean(a) - mean(b);
  if (pooled == 0) {
    if (diff == 0) return 0;
    return diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return diff / pooled;
}

std::vector<ClusterProfile> cluster_profiles(std::span<const int> assignments, const Matrix& scores,
                                             std::span<const int> outcomes) {
  if (assignments.size() != scores.rows() || (!outcomes.empty() && outcomes.size() != assignments.size()))
    throw Error(ErrorCode::LengthMismatch, "assignments, scores and outcomes must have equal length");
  const std::size_t dims = std::min<std::size_t>(3, scores.cols());
  struct Acc {
    std::size_t size = 0, known = 0, sli = 0;
    std::vector<double> sums;
  };
  std::map<int, Acc> acc;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    auto& a = acc[assignments[i]];
    if (a.sums.empty()) a.sums.assign(dims, 0.0);
    ++a.size;
    for (std::size_t d = 0; d < dims; ++d) a.sums[d] += scores(i, d);
    if (!outcomes.empty() && outcomes[i] >= 0) {
      ++a.known;
      if (outcomes[i] == 1) ++a.sli;
    }
  }
  std::vector<ClusterProfile> out;
  for (const auto& [label, a] : acc) {
    ClusterProfile p;
    p.cluster = label;
    p.size = a.size;
    for (double s : a.sums) p.pc_means.push_back(s / static_cast<double>(a.size));
    p.y_ratio = a.known ? static_cast<double>(a.sli) / static_cast<double>(a.known) : std::nan("");
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<EffectStats> compare_features(const Matrix& m, std::span<const std::string> names,
                                          std::span<const int> assignments, std::span<const std::string> features) {
  if (assignments.size() != m.rows()) throw Error(ErrorCode::LengthMismatch, "assignments do not match the number of rows");
  std::set<int> labels;
  for (int a : assignments)
    if (a >= 0) labels.insert(a);
  std::vector<EffectStats> out;
  for (const auto& feature : features) {
    const auto it = std::find(names.begin(), names.end(), feature);
    if (it == names.end()) throw Error(ErrorCode::BadConfig, "unknown feature to compare: " + feature);
    const auto col = static_cast<std::size_t>(it - names.begin());
    std::map<int, std::vector<double>> groups;
    for (std::size_t i = 0; i < m.rows(); ++i)
      if (assignments[i] >= 0) groups[assignments[i]].push_back(m(i, col));
    for (auto x = labels.begin(); x != labels.end(); ++x)
      for (auto y = std::next(x); y != labels.end(); ++y) {
        const auto& ga = groups[*x];
        const auto& gb = groups[*y];
        const auto w = welch_t_test(ga, gb);
        EffectStats e;
        e.feature = feature;
        e.cluster_a = *x;
        e.cluster_b = *y;
        e.mean_a = mean(ga);
        e.mean_b = mean(gb);
        e.t = w.t;
        e.df = w.df;
        e.p_value = w.p_value;
        e.cohens_d = cohens_d(ga, gb);
        out.push_back(std::move(e));
      }
  }
  return out;
}

}  // namespace langprofile
