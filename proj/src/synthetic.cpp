#include "langprofile/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "langprofile/features.hpp"

namespace langprofile {
namespace {

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform(rng);
  while (u1 <= 0) u1 = uniform(rng);
  const double u2 = uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Matrix make_blobs(std::size_t n, std::size_t dims, double separation, std::uint64_t seed, std::vector<int>* labels) {
  std::mt19937_64 rng(seed);
  Matrix m(n, dims);
  if (labels) labels->assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int blob = uniform(rng) < 1.0 / 3.0 ? 0 : 1;
    if (labels) (*labels)[i] = blob;
    for (std::size_t d = 0; d < dims; ++d) m(i, d) = standard_normal(rng);
    m(i, 0) += blob == 0 ? separation / 2 : -separation / 2;
  }
  return m;
}

FeatureTable make_blob_table(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t p = feature_count();
  std::vector<double> base(p), scale(p), loading(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    base[j] = 1.0 + 20.0 * uniform(rng);
    scale[j] = 0.5 + 4.5 * uniform(rng);
    if (j % 2 == 0) loading[j] = (0.6 + 0.4 * uniform(rng)) * (j % 4 == 0 ? 1.0 : -1.0);
  }
  FeatureTable t;
  t.values = Matrix(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    const bool first = uniform(rng) < 1.0 / 3.0;
    const double shift = first ? 4.0 : -2.0;
    t.ids.push_back("s" + std::to_string(i + 1));
    t.corpora.push_back("synthetic");
    t.groups.push_back(uniform(rng) < (first ? 0.17 : 0.26) ? Group::SLI : Group::TD);
    t.age_months.push_back(std::round(48.0 + 72.0 * uniform(rng)));
    t.sexes.push_back(uniform(rng) < 0.5 ? "male" : "female");
    for (std::size_t j = 0; j < p; ++j)
      t.values(i, j) = base[j] + scale[j] * (loading[j] * shift + standard_normal(rng));
  }
  return t;
}

}  // namespace langprofile
