#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "langprofile/clustering.hpp"
#include "langprofile/error.hpp"
#include "langprofile/synthetic.hpp"
#include "oracles.hpp"

using namespace langprofile;

namespace {

Matrix four_points() { return Matrix::from_rows({{0, 0}, {0, 1}, {10, 0}, {10, 1}}); }

std::vector<int> random_labels(std::size_t n, int k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, k - 1);
  std::vector<int> out(n);
  for (auto& x : out) x = u(rng);
  return out;
}

}  // namespace

TEST_CASE("kmeans separates the two-pair fixture") {
  const auto r = kmeans(four_points(), 2, 1);
  CHECK(r.assignments[0] == r.assignments[1]);
  CHECK(r.assignments[2] == r.assignments[3]);
  CHECK(r.assignments[0] != r.assignments[2]);
  const int a = r.assignments[0], b = r.assignments[2];
  CHECK(r.centroids(a, 0) == doctest::Approx(0));
  CHECK(r.centroids(a, 1) == doctest::Approx(0.5));
  CHECK(r.centroids(b, 0) == doctest::Approx(10));
  CHECK(r.centroids(b, 1) == doctest::Approx(0.5));
  CHECK(r.inertia == doctest::Approx(1.0));
}

TEST_CASE("kmeans with k = 1 puts the centroid at the mean") {
  const auto p = four_points();
  const auto r = kmeans(p, 1, 3);
  CHECK(r.centroids(0, 0) == doctest::Approx(5));
  CHECK(r.centroids(0, 1) == doctest::Approx(0.5));
  // total squared deviation: 4 * 25 + 4 * 0.25
  CHECK(r.inertia == doctest::Approx(101));
}

TEST_CASE("kmeans throws DegenerateInput when n < k") {
  try {
    kmeans(four_points(), 5, 1);
    FAIL("expected DegenerateInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateInput);
  }
}

TEST_CASE("kmeans invariants: labels in range, clusters non-empty, inertia matches, fixpoint") {
  std::mt19937_64 rng(17);
  const auto p = oracle::random_matrix(120, 3, rng);
  for (std::size_t k : {2u, 3u, 5u}) {
    const auto r = kmeans(p, k, 99, 8);
    std::set<int> used(r.assignments.begin(), r.assignments.end());
    CHECK(used.size() == k);
    CHECK(*used.begin() == 0);
    CHECK(*used.rbegin() == static_cast<int>(k) - 1);
    double inertia = 0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
      inertia += squared_distance(p.row(i), r.centroids.row(static_cast<std::size_t>(r.assignments[i])));
      // fixpoint: no centroid is strictly closer
      const double own = squared_distance(p.row(i), r.centroids.row(static_cast<std::size_t>(r.assignments[i])));
      for (std::size_t c = 0; c < k; ++c) CHECK(own <= squared_distance(p.row(i), r.centroids.row(c)) + 1e-12);
    }
    CHECK(std::abs(inertia - r.inertia) < 1e-9 * std::max(1.0, inertia));
    CHECK(std::abs(oracle::wss(p, r.assignments, static_cast<int>(k)) - r.inertia) < 1e-9 * std::max(1.0, inertia));
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i)
      CHECK(r.inertia_history[i] <= r.inertia_history[i - 1] + 1e-9);
  }
}

TEST_CASE("kmeans is deterministic for a fixed seed") {
  std::mt19937_64 rng(2);
  const auto p = oracle::random_matrix(60, 2, rng);
  const auto a = kmeans(p, 3, 123), b = kmeans(p, 3, 123);
  CHECK(a.assignments == b.assignments);
  CHECK(a.centroids == b.centroids);
  CHECK(a.inertia == b.inertia);
}

TEST_CASE("kmeans matches the exhaustive optimum on small fixtures") {
  std::mt19937_64 rng(31);
  int matched = 0;
  for (int f = 0; f < 20; ++f) {
    const auto p = oracle::random_matrix(7, 2, rng);
    const int k = 2 + f % 2;
    const double best = oracle::optimal_inertia(p, k);
    const auto r = kmeans(p, static_cast<std::size_t>(k), static_cast<std::uint64_t>(f));
    CHECK(r.inertia >= best - 1e-9);
    if (r.inertia <= best + 1e-9 * std::max(1.0, best)) ++matched;
  }
  CHECK(matched >= 19);
}

TEST_CASE("silhouette of the two-pair fixture matches the hand formula") {
  const auto p = four_points();
  const std::vector<int> labels{0, 0, 1, 1};
  // every point: a = 1, b = (10 + sqrt(101)) / 2
  const double b = (10 + std::sqrt(101.0)) / 2;
  const double expected = (b - 1) / b;
  CHECK(silhouette(p, labels) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(silhouette(p, labels) - oracle::silhouette(p, labels)) < 1e-12);
}

TEST_CASE("silhouette conventions") {
  SUBCASE("identical points across two clusters score 0") {
    const Matrix p = Matrix::from_rows({{1, 1}, {1, 1}, {1, 1}, {1, 1}});
    CHECK(silhouette(p, std::vector<int>{0, 0, 1, 1}) == 0.0);
  }
  SUBCASE("singletons score 0") {
    const Matrix p = Matrix::from_rows({{0}, {1}, {5}});
    const auto s = silhouette_samples(p, std::vector<int>{0, 0, 1});
    CHECK(s[2] == 0.0);
  }
  SUBCASE("one label throws SingleCluster") {
    try {
      silhouette(four_points(), std::vector<int>{0, 0, 0, 0});
      FAIL("expected SingleCluster");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SingleCluster);
    }
  }
}

TEST_CASE("silhouette matches the double loop, lies in [-1, 1] and ignores row order") {
  std::mt19937_64 rng(41);
  for (int f = 0; f < 10; ++f) {
    const auto p = oracle::random_matrix(25, 3, rng);
    const auto labels = random_labels(25, 3, rng);
    const double s = silhouette(p, labels);
    CHECK(std::abs(s - oracle::silhouette(p, labels)) < 1e-12);
    CHECK(s >= -1);
    CHECK(s <= 1);
    // reverse the rows
    Matrix q(25, 3);
    std::vector<int> ql(25);
    for (std::size_t i = 0; i < 25; ++i) {
      for (std::size_t d = 0; d < 3; ++d) q(24 - i, d) = p(i, d);
      ql[24 - i] = labels[i];
    }
    CHECK(std::abs(silhouette(q, ql) - s) < 1e-12);
  }
}

TEST_CASE("silhouette_sweep picks k = 2 on two blobs") {
  const auto p = make_blobs(300, 3, 8.0, 5);
  const auto sweep = silhouette_sweep(p, 2, 6, 7, 8);
  REQUIRE(sweep.size() == 5);
  for (std::size_t i = 1; i < sweep.size(); ++i) CHECK(sweep[0].silhouette > sweep[i].silhouette);
}

TEST_CASE("ward_linkage hand-traced merge order on six 1-D points") {
  const Matrix p = Matrix::from_rows({{0}, {1}, {5}, {6.5}, {12}, {14}});
  const auto r = ward_linkage(p, 1);
  REQUIRE(r.merges.size() == 5);
  // cost of joining clusters A, B = |A||B| / (|A| + |B|) * |mean A - mean B|^2
  const std::vector<std::tuple<std::size_t, std::size_t, double, std::size_t>> expected{
      {0, 1, 0.5, 2}, {2, 3, 1.125, 2}, {4, 5, 2.0, 2}, {0, 2, 27.5625, 4}, {0, 4, 4.0 * 2 / 6 * 9.875 * 9.875, 6}};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(r.merges[i].a == std::get<0>(expected[i]));
    CHECK(r.merges[i].b == std::get<1>(expected[i]));
    CHECK(r.merges[i].cost == doctest::Approx(std::get<2>(expected[i])).epsilon(1e-12));
    CHECK(r.merges[i].size == std::get<3>(expected[i]));
  }
  CHECK(ward_linkage(p, 2).assignments == std::vector<int>{0, 0, 0, 0, 1, 1});
  CHECK(ward_linkage(p, 3).assignments == std::vector<int>{0, 0, 1, 1, 2, 2});
}

TEST_CASE("ward merge costs equal the increase in within-cluster sum of squares") {
  std::mt19937_64 rng(55);
  const auto p = oracle::random_matrix(15, 2, rng);
  const auto r = ward_linkage(p, 1);
  // replay the merges with explicit membership and recompute each increase
  std::vector<int> owner(15);
  for (int i = 0; i < 15; ++i) owner[static_cast<std::size_t>(i)] = i;
  auto ess = [&](int id) {
    std::vector<int> labels(15, -1);
    for (std::size_t i = 0; i < 15; ++i)
      if (owner[i] == id) labels[i] = 0;
    return oracle::wss(p, labels, 1);
  };
  double previous = 0;
  for (const auto& m : r.merges) {
    const double before = ess(static_cast<int>(m.a)) + ess(static_cast<int>(m.b));
    for (auto& o : owner)
      if (o == static_cast<int>(m.b)) o = static_cast<int>(m.a);
    const double after = ess(static_cast<int>(m.a));
    CHECK(m.cost == doctest::Approx(after - before).epsilon(1e-9));
    CHECK(m.cost >= previous - 1e-9);  // Ward merge costs are monotone
    previous = m.cost;
  }
}

TEST_CASE("ward and kmeans agree on the two-pair fixture") {
  const auto w = ward_linkage(four_points(), 2);
  const auto k = kmeans(four_points(), 2, 1);
  CHECK(ari(w.assignments, k.assignments) == 1.0);
}

TEST_CASE("dbscan") {
  SUBCASE("eps below every pairwise distance makes everything noise") {
    const auto labels = dbscan(four_points(), 0.5, 2);
    CHECK(std::all_of(labels.begin(), labels.end(), [](int l) { return l == -1; }));
  }
  SUBCASE("two pairs become two clusters") {
    CHECK(dbscan(four_points(), 1.0, 2) == std::vector<int>{0, 0, 1, 1});
  }
  SUBCASE("border points join, isolated points are noise") {
    const Matrix p = Matrix::from_rows({{0}, {0.5}, {1}, {1.9}, {10}});
    // core: 0, 0.5, 1 (3 neighbours with eps 1, min_pts 3); 1.9 is a border of 1
    CHECK(dbscan(p, 1.0, 3) == std::vector<int>{0, 0, 0, 0, -1});
  }
}

TEST_CASE("boundary_cases flags the percentile of smallest deltas") {
  const auto p = make_blobs(1000, 3, 6.0, 13);
  const auto fit = kmeans(p, 2, 13, 4);
  const auto b = boundary_cases(p, fit.centroids, {}, 5.0);
  CHECK(b.indices.size() >= 49);
  CHECK(b.indices.size() <= 51);
  std::set<std::size_t> flagged(b.indices.begin(), b.indices.end());
  double max_in = -1, min_out = INFINITY;
  for (std::size_t i = 0; i < 1000; ++i) {
    // independent delta: gap between the two nearest centroid distances
    std::vector<double> d{distance(p.row(i), fit.centroids.row(0)), distance(p.row(i), fit.centroids.row(1))};
    std::sort(d.begin(), d.end());
    CHECK(b.deltas[i] == doctest::Approx(d[1] - d[0]).epsilon(1e-12));
    if (flagged.count(i)) {
      max_in = std::max(max_in, b.deltas[i]);
      CHECK(b.deltas[i] <= b.threshold);
    } else {
      min_out = std::min(min_out, b.deltas[i]);
    }
  }
  CHECK(max_in <= min_out);
  CHECK(std::isnan(b.outcome_ratio));
}

TEST_CASE("boundary_cases: an equidistant point is always flagged") {
  Matrix p = Matrix::from_rows({{-5, 0}, {-4, 0}, {-6, 0}, {5, 0}, {4, 0}, {6, 0}, {0, 3}});
  const Matrix c = Matrix::from_rows({{-5, 0}, {5, 0}});
  const auto b = boundary_cases(p, c, std::vector<int>{0, 0, 0, 0, 0, 0, 1}, 1.0);
  CHECK(b.deltas[6] == 0.0);
  CHECK(std::find(b.indices.begin(), b.indices.end(), 6u) != b.indices.end());
  CHECK(b.outcome_ratio == 1.0);
}

TEST_CASE("detect_outliers") {
  SUBCASE("one far point in a tight cluster") {
    Matrix p(21, 2);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0, 0.1);
    for (std::size_t i = 0; i < 20; ++i) p(i, 0) = g(rng), p(i, 1) = g(rng);
    p(20, 0) = 50;
    std::vector<int> labels(21, 0);
    const Matrix c = Matrix::from_rows({{0, 0}});
    CHECK(detect_outliers(p, c, labels) == std::vector<std::size_t>{20});
  }
  SUBCASE("equidistant points are never flagged") {
    const Matrix p = Matrix::from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
    const Matrix c = Matrix::from_rows({{0, 0}});
    CHECK(detect_outliers(p, c, std::vector<int>{0, 0, 0, 0}).empty());
  }
  SUBCASE("Gaussian cluster tail matches the chi distribution") {
    // For a 3-D standard normal the distance is chi(3): mean 2 sqrt(2/pi),
    // variance 3 - mean^2, and P(chi > t) = erfc(t / sqrt2) + sqrt(2/pi) t exp(-t^2/2).
    const double mu = 2 * std::sqrt(2 / M_PI), sd = std::sqrt(3 - mu * mu), t = mu + 3 * sd;
    const double tail = std::erfc(t / std::sqrt(2.0)) + std::sqrt(2 / M_PI) * t * std::exp(-t * t / 2);
    const std::size_t n = 10000;
    std::mt19937_64 rng(77);
    Matrix p(n, 3);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < 3; ++d) p(i, d) = standard_normal(rng);
    const Matrix c(1, 3, 0.0);
    const auto out = detect_outliers(p, c, std::vector<int>(n, 0));
    const double frac = static_cast<double>(out.size()) / n;
    const double se = std::sqrt(tail * (1 - tail) / n);
    CHECK(std::abs(frac - tail) < 4 * se);
  }
}

TEST_CASE("ari and ami: identity, permutation and symmetry") {
  std::mt19937_64 rng(61);
  const auto a = random_labels(200, 4, rng);
  auto perm = a;
  for (auto& x : perm) x = (x + 1) % 4;
  CHECK(ari(a, a) == 1.0);
  CHECK(ami(a, a) == 1.0);
  CHECK(best_mapping_accuracy(a, a) == 1.0);
  CHECK(ari(a, perm) == 1.0);
  CHECK(ami(a, perm) == 1.0);
  CHECK(best_mapping_accuracy(a, perm) == 1.0);
  const auto other = random_labels(200, 3, rng);
  CHECK(ari(perm, other) == ari(a, other));
  CHECK(ami(perm, other) == ami(a, other));
  CHECK(ami(other, perm) == ami(other, a));
  CHECK(best_mapping_accuracy(perm, other) == best_mapping_accuracy(a, other));
  for (int f = 0; f < 5; ++f) {
    const auto x = random_labels(60, 3, rng), y = random_labels(60, 4, rng);
    CHECK(ari(x, y) == doctest::Approx(ari(y, x)).epsilon(1e-12));
    CHECK(ami(x, y) == doctest::Approx(ami(y, x)).epsilon(1e-12));
    CHECK(ari(x, y) == doctest::Approx(oracle::pair_counting_ari(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("ari on a hand-counted example") {
  // 15 pairs; together in a: 6; together in b: {0,1}, {2,3}, {2,4}, {3,4} = 4;
  // together in both: {0,1}, {3,4} = 2; expected = 6 * 4 / 15 = 1.6, max = 5
  const std::vector<int> a{0, 0, 0, 1, 1, 1}, b{0, 0, 1, 1, 1, 2};
  CHECK(ari(a, b) == doctest::Approx((2 - 1.6) / (5 - 1.6)).epsilon(1e-12));
}

TEST_CASE("ami matches the exact permutation expectation") {
  const std::vector<std::pair<std::vector<int>, std::vector<int>>> cases{
      {{0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 1, 2}},
      {{0, 0, 1, 1, 2, 2, 2}, {1, 0, 1, 0, 2, 2, 0}},
      {{0, 1, 0, 1, 0, 1}, {0, 0, 0, 1, 1, 1}},
  };
  for (const auto& [a, b] : cases) CHECK(ami(a, b) == doctest::Approx(oracle::ami_by_permutation(a, b)).epsilon(1e-9));
}

TEST_CASE("random independent labels have ARI near zero") {
  std::mt19937_64 rng(71);
  const auto a = random_labels(1000, 3, rng), b = random_labels(1000, 3, rng);
  CHECK(std::abs(ari(a, b)) < 0.05);
  CHECK(std::abs(ami(a, b)) < 0.05);
}

TEST_CASE("best_mapping_accuracy matches brute force, including more than six labels") {
  std::mt19937_64 rng(81);
  for (int k : {2, 3, 5, 8}) {
    const auto a = random_labels(80, k, rng), b = random_labels(80, k, rng);
    CHECK(best_mapping_accuracy(a, b) == doctest::Approx(oracle::best_accuracy(a, b)).epsilon(1e-12));
  }
  const auto a = random_labels(50, 3, rng), b = random_labels(50, 7, rng);
  CHECK(best_mapping_accuracy(a, b) == doctest::Approx(oracle::best_accuracy(a, b)).epsilon(1e-12));
}

TEST_CASE("agreement metrics reject unequal lengths") {
  try {
    ari(std::vector<int>{0, 1}, std::vector<int>{0});
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
}

TEST_CASE("derive_seed gives distinct sub-seeds") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 100; ++r) seen.insert(derive_seed(42, r));
  CHECK(seen.size() == 100);
  CHECK(derive_seed(42, 3) == derive_seed(42, 3));
}
