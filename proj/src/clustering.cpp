#include "langprofile/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "langprofile/error.hpp"
#include "langprofile/numerics.hpp"

namespace langprofile {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t nearest_centroid(std::span<const double> x, const Matrix& centroids, double* dist2 = nullptr) {
  std::size_t best = 0;
  double best_d = kInf;
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(x, centroids.row(c));
    if (d < best_d) best_d = d, best = c;
  }
  if (dist2) *dist2 = best_d;
  return best;
}

Matrix kmeanspp_seed(const Matrix& x, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = x.rows(), dims = x.cols();
  Matrix centers(k, dims);
  auto pick = [&](std::size_t c, std::size_t row) {
    for (std::size_t d = 0; d < dims; ++d) centers(c, d) = x(row, d);
  };
  pick(0, std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n))));
  std::vector<double> d2(n, kInf);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x.row(i), centers.row(c - 1)));
      total += d2[i];
    }
    std::size_t chosen = n - 1;
    if (total > 0) {
      const double r = uniform01(rng) * total;
      double cum = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0) continue;
        chosen = i;
        cum += d2[i];
        if (cum > r) break;
      }
    } else {
      chosen = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
    }
    pick(c, chosen);
  }
  return centers;
}

// Centroids as member means. An empty cluster takes the point farthest from
// its current centroid among clusters with more than one member.
void update_centroids(const Matrix& x, std::vector<int>& assign, Matrix& centroids) {
  const std::size_t n = x.rows(), k = centroids.rows(), dims = x.cols();
  std::vector<std::size_t> counts(k, 0);
  for (int a : assign) ++counts[static_cast<std::size_t>(a)];
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    std::size_t far = n;
    double far_d = -1;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ai = static_cast<std::size_t>(assign[i]);
      if (counts[ai] < 2) continue;
      const double d = squared_distance(x.row(i), centroids.row(ai));
      if (d > far_d) far_d = d, far = i;
    }
    --counts[static_cast<std::size_t>(assign[far])];
    assign[far] = static_cast<int>(c);
    counts[c] = 1;
  }
  centroids = Matrix(k, dims);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(assign[i]);
    for (std::size_t d = 0; d < dims; ++d) centroids(a, d) += x(i, d);
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < dims; ++d) centroids(c, d) /= static_cast<double>(counts[c]);
}

double inertia_of(const Matrix& x, std::span<const int> assign, const Matrix& centroids) {
  double s = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) s += squared_distance(x.row(i), centroids.row(static_cast<std::size_t>(assign[i])));
  return s;
}

ClusterResult lloyd(const Matrix& x, std::size_t k, std::mt19937_64& rng, std::size_t max_iter) {
  ClusterResult r;
  r.k = k;
  r.centroids = kmeanspp_seed(x, k, rng);
  r.assignments.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) r.assignments[i] = static_cast<int>(nearest_centroid(x.row(i), r.centroids));
  while (r.iterations < max_iter) {
    update_centroids(x, r.assignments, r.centroids);
    ++r.iterations;
    r.inertia_history.push_back(inertia_of(x, r.assignments, r.centroids));
    bool changed = false;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const int a = static_cast<int>(nearest_centroid(x.row(i), r.centroids));
      if (a != r.assignments[i]) r.assignments[i] = a, changed = true;
    }
    if (!changed) break;
  }
  update_centroids(x, r.assignments, r.centroids);
  r.inertia = inertia_of(x, r.assignments, r.centroids);
  return r;
}

struct Labels {
  std::vector<std::size_t> ids;  // compact label per row
  std::size_t count = 0;
};

// Ids follow first appearance, so any relabelling of the input yields the same ids.
Labels compact(std::span<const int> labels) {
  std::map<int, std::size_t> index;
  Labels out;
  for (int l : labels) {
    auto [it, inserted] = index.emplace(l, index.size());
    out.ids.push_back(it->second);
  }
  out.count = index.size();
  return out;
}

std::vector<std::vector<double>> contingency(const Labels& a, const Labels& b) {
  std::vector<std::vector<double>> c(a.count, std::vector<double>(b.count, 0.0));
  for (std::size_t i = 0; i < a.ids.size(); ++i) c[a.ids[i]][b.ids[i]] += 1;
  return c;
}

void check_lengths(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::LengthMismatch,
                "label vectors have lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
}

double comb2(double n) { return n * (n - 1) / 2; }

// Maximum-weight perfect matching on a square matrix (Hungarian method).
double max_assignment(const std::vector<std::vector<double>>& w) {
  const std::size_t n = w.size();
  double top = 0;
  for (const auto& row : w)
    for (double v : row) top = std::max(top, v);
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = (top - w[i0 - 1][j - 1]) - u[i0] - v[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j])
          u[p[j]] += delta, v[j] -= delta;
        else
          minv[j] -= delta;
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0;
  for (std::size_t j = 1; j <= n; ++j) total += w[p[j] - 1][j - 1];
  return total;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 1));
}

ClusterResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t n_init, std::size_t max_iter) {
  if (k == 0 || points.rows() < k)
    throw Error(ErrorCode::DegenerateInput,
                "kmeans needs at least k rows (n=" + std::to_string(points.rows()) + ", k=" + std::to_string(k) + ")");
  if (n_init == 0) throw std::invalid_argument("n_init must be positive");
  ClusterResult best;
  for (std::size_t r = 0; r < n_init; ++r) {
    std::mt19937_64 rng(derive_seed(seed, r));
    auto run = lloyd(points, k, rng, max_iter);
    if (r == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  best.seed = seed;
  best.n_init = n_init;
  return best;
}

std::vector<double> silhouette_samples(const Matrix& points, std::span<const int> assignments) {
  if (assignments.size() != points.rows())
    throw Error(ErrorCode::LengthMismatch, "assignments do not match the number of rows");
  const auto labels = compact(assignments);
  if (labels.count < 2) throw Error(ErrorCode::SingleCluster, "silhouette needs at least two clusters");
  std::vector<std::size_t> sizes(labels.count, 0);
  for (auto id : labels.ids) ++sizes[id];
  const std::size_t n = points.rows();
  std::vector<double> out(n, 0.0);
  std::vector<double> sums(labels.count);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = labels.ids[i];
    if (sizes[own] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[labels.ids[j]] += distance(points.row(i), points.row(j));
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = kInf;
    for (std::size_t c = 0; c < labels.count; ++c)
      if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    out[i] = denom > 0 ? (b - a) / denom : 0.0;
  }
  return out;
}

double silhouette(const Matrix& points, std::span<const int> assignments) { return mean(silhouette_samples(points, assignments)); }

std::vector<SweepEntry> silhouette_sweep(const Matrix& points, std::size_t k_min, std::size_t k_max,
                                         std::uint64_t seed, std::size_t n_init) {
  if (k_min < 2 || k_max < k_min) throw std::invalid_argument("k range must satisfy 2 <= k_min <= k_max");
  std::vector<SweepEntry> out;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    const auto fit = kmeans(points, k, seed, n_init);
    out.push_back({k, silhouette(points, fit.assignments), fit.inertia});
  }
  return out;
}

WardResult ward_linkage(const Matrix& points, std::size_t k) {
  const std::size_t n = points.rows();
  if (k == 0 || k > n) throw Error(ErrorCode::DegenerateInput, "ward linkage needs 1 <= k <= n");
  std::vector<double> dist(n * n, 0.0);
  auto D = [&](std::size_t i, std::size_t j) -> double& { return dist[i * n + j]; };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) D(i, j) = D(j, i) = squared_distance(points.row(i), points.row(j)) / 2;

  std::vector<std::size_t> size(n, 1), parent(n), nn(n, n);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<bool> active(n, true);
  std::vector<double> nnd(n, kInf);
  auto rescan = [&](std::size_t i) {
    nnd[i] = kInf;
    nn[i] = n;
    for (std::size_t j = 0; j < n; ++j)
      if (active[j] && j != i && D(i, j) < nnd[i]) nnd[i] = D(i, j), nn[i] = j;
  };
  for (std::size_t i = 0; i < n; ++i) rescan(i);

  WardResult out;
  for (std::size_t step = 0; step + k < n; ++step) {
    std::size_t i = n;
    for (std::size_t c = 0; c < n; ++c)
      if (active[c] && (i == n || nnd[c] < nnd[i])) i = c;
    const std::size_t a = std::min(i, nn[i]), b = std::max(i, nn[i]);
    const double dab = D(a, b);
    const double na = static_cast<double>(size[a]), nb = static_cast<double>(size[b]);
    out.merges.push_back({a, b, dab, size[a] + size[b]});
    for (std::size_t m = 0; m < n; ++m) {
      if (!active[m] || m == a || m == b) continue;
      const double nm = static_cast<double>(size[m]);
      D(a, m) = D(m, a) = ((na + nm) * D(a, m) + (nb + nm) * D(b, m) - nm * dab) / (na + nb + nm);
    }
    size[a] += size[b];
    active[b] = false;
    parent[b] = a;
    rescan(a);
    for (std::size_t m = 0; m < n; ++m) {
      if (!active[m] || m == a) continue;
      if (nn[m] == a || nn[m] == b)
        rescan(m);
      else if (D(m, a) < nnd[m] || (D(m, a) == nnd[m] && a < nn[m]))
        nnd[m] = D(m, a), nn[m] = a;
    }
  }

  auto root = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i];
    return i;
  };
  std::map<std::size_t, int> label;
  out.assignments.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = label.emplace(root(i), static_cast<int>(label.size()));
    out.assignments[i] = it->second;
  }
  return out;
}

std::vector<int> dbscan(const Matrix& points, double eps, std::size_t min_pts) {
  if (!(eps > 0) || min_pts < 1) throw std::invalid_argument("dbscan needs eps > 0 and min_pts >= 1");
  const std::size_t n = points.rows();
  constexpr int kUnvisited = -2, kNoise = -1;
  auto neighbours = [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j)
      if (distance(points.row(i), points.row(j)) <= eps) out.push_back(j);
    return out;
  };
  std::vector<int> labels(n, kUnvisited);
  int cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnvisited) continue;
    auto queue = neighbours(i);
    if (queue.size() < min_pts) {
      labels[i] = kNoise;
      continue;
    }
    labels[i] = cluster;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t p = queue[q];
      if (labels[p] == kNoise) labels[p] = cluster;
      if (labels[p] != kUnvisited) continue;
      labels[p] = cluster;
      auto more = neighbours(p);
      if (more.size() >= min_pts) queue.insert(queue.end(), more.begin(), more.end());
    }
    ++cluster;
  }
  return labels;
}

BoundaryReport boundary_cases(const Matrix& points, const Matrix& centroids, std::span<const int> outcomes,
                              double pct) {
  if (centroids.rows() < 2) throw Error(ErrorCode::SingleCluster, "boundary cases need at least two centroids");
  if (points.rows() == 0) throw Error(ErrorCode::DegenerateInput, "no points");
  if (!outcomes.empty() && outcomes.size() != points.rows())
    throw Error(ErrorCode::LengthMismatch, "outcomes do not match the number of rows");
  BoundaryReport r;
  r.percentile = pct;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double d1 = kInf, d2 = kInf;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = distance(points.row(i), centroids.row(c));
      if (d < d1)
        d2 = d1, d1 = d;
      else if (d < d2)
        d2 = d;
    }
    r.deltas.push_back(d2 - d1);
  }
  r.threshold = percentile(r.deltas, pct);
  for (std::size_t i = 0; i < r.deltas.size(); ++i)
    if (r.deltas[i] <= r.threshold) r.indices.push_back(i);

  for (std::size_t d = 0; d < points.cols(); ++d) {
    std::vector<double> col;
    for (auto i : r.indices) col.push_back(points(i, d));
    r.dim_mean.push_back(mean(col));
    r.dim_sd.push_back(sample_sd(col));
  }
  if (!r.dim_mean.empty()) r.pc1_mean = r.dim_mean[0], r.pc1_sd = r.dim_sd[0];
  std::size_t known = 0, sli = 0;
  for (auto i : r.indices) {
    if (outcomes.empty() || outcomes[i] < 0) continue;
    ++known;
    if (outcomes[i] == 1) ++sli;
  }
  r.outcome_ratio = known ? static_cast<double>(sli) / static_cast<double>(known) : std::nan("");
  return r;
}

std::vector<std::size_t> detect_outliers(const Matrix& points, const Matrix& centroids, std::span<const int> assignments) {
  if (assignments.size() != points.rows())
    throw Error(ErrorCode::LengthMismatch, "assignments do not match the number of rows");
  std::vector<double> dist(points.rows());
  std::vector<std::vector<double>> per(centroids.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto c = static_cast<std::size_t>(assignments[i]);
    dist[i] = distance(points.row(i), centroids.row(c));
    per[c].push_back(dist[i]);
  }
  std::vector<double> limit(centroids.rows());
  for (std::size_t c = 0; c < per.size(); ++c) {
    const double mu = mean(per[c]);
    // small slack so rounding noise among equal distances is not flagged
    limit[c] = mu + 3 * sample_sd(per[c]) + 1e-12 * std::max(1.0, mu);
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.rows(); ++i)
    if (dist[i] > limit[static_cast<std::size_t>(assignments[i])]) out.push_back(i);
  return out;
}

double ari(std::span<const int> a, std::span<const int> b) {
  check_lengths(a, b);
  const double n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  const auto la = compact(a), lb = compact(b);
  const auto c = contingency(la, lb);
  double index = 0, sa = 0, sb = 0;
  std::vector<double> col(lb.count, 0.0);
  for (const auto& row : c) {
    double rs = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      index += comb2(row[j]);
      rs += row[j];
      col[j] += row[j];
    }
    sa += comb2(rs);
  }
  for (double v : col) sb += comb2(v);
  const double expected = sa * sb / comb2(n);
  const double max_index = (sa + sb) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double ami(std::span<const int> a, std::span<const int> b) {
  check_lengths(a, b);
  const auto la = compact(a), lb = compact(b);
  if ((la.count == 1 && lb.count == 1) || a.empty()) return 1.0;
  const auto c = contingency(la, lb);
  const double n = static_cast<double>(a.size());
  std::vector<double> ra(la.count, 0.0), cb(lb.count, 0.0);
  for (std::size_t i = 0; i < la.count; ++i)
    for (std::size_t j = 0; j < lb.count; ++j) ra[i] += c[i][j], cb[j] += c[i][j];

  double mi = 0;
  for (std::size_t i = 0; i < la.count; ++i)
    for (std::size_t j = 0; j < lb.count; ++j)
      if (c[i][j] > 0) mi += c[i][j] / n * std::log(n * c[i][j] / (ra[i] * cb[j]));
  auto entropy = [&](const std::vector<double>& m) {
    double h = 0;
    for (double v : m)
      if (v > 0) h -= v / n * std::log(v / n);
    return h;
  };

  double emi = 0;
  const double lg_n = std::lgamma(n + 1);
  for (double ai : ra)
    for (double bj : cb) {
      const double lo = std::max(1.0, ai + bj - n), hi = std::min(ai, bj);
      const double fixed = std::lgamma(ai + 1) + std::lgamma(bj + 1) + std::lgamma(n - ai + 1) + std::lgamma(n - bj + 1) - lg_n;
      for (double nij = lo; nij <= hi; nij += 1) {
        const double lg = fixed - std::lgamma(nij + 1) - std::lgamma(ai - nij + 1) - std::lgamma(bj - nij + 1) -
                          std::lgamma(n - ai - bj + nij + 1);
        emi += nij / n * std::log(n * nij / (ai * bj)) * std::exp(lg);
      }
    }

  const double eps = std::numeric_limits<double>::epsilon();
  double denom = std::max(entropy(ra), entropy(cb)) - emi;
  denom = denom < 0 ? std::min(denom, -eps) : std::max(denom, eps);
  return (mi - emi) / denom;
}

double best_mapping_accuracy(std::span<const int> a, std::span<const int> b) {
  check_lengths(a, b);
  if (a.empty()) return 1.0;
  const auto la = compact(a), lb = compact(b);
  const std::size_t m = std::max(la.count, lb.count);
  auto c = contingency(la, lb);
  c.resize(m);
  for (auto& row : c) row.resize(m, 0.0);

  double best = 0;
  if (m <= 6) {
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      double s = 0;
      for (std::size_t i = 0; i < m; ++i) s += c[i][perm[i]];
      best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    best = max_assignment(c);
  }
  return best / static_cast<double>(a.size());
}

}  // namespace langprofile
