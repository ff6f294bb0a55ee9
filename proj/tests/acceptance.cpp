// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "langprofile/chat.hpp"
#include "langprofile/clustering.hpp"
#include "langprofile/features.hpp"
#include "langprofile/ngram.hpp"
#include "langprofile/numerics.hpp"
#include "langprofile/pipeline.hpp"
#include "langprofile/stats.hpp"
#include "langprofile/synthetic.hpp"
#include "oracles.hpp"

using namespace langprofile;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kData = LANGPROFILE_TEST_DATA;
const fs::path kRepoData = fs::path(LANGPROFILE_TEST_DATA).parent_path().parent_path() / "data";
const fs::path kScratch = fs::path(LANGPROFILE_BINARY_DIR) / "acceptance_scratch";

// Published eigenvalues and variance percentages for fourteen components.
const std::vector<double> kEigen{3.97, 1.85, 0.96, 0.79, 0.71, 0.62, 0.57, 0.48, 0.37, 0.32, 0.30, 0.27, 0.25, 0.24};
const std::vector<double> kVariancePct{28.35, 13.23, 6.87, 5.64, 5.05, 4.46, 4.05,
                                       3.42,  2.63,  2.30, 2.16, 1.93, 1.75, 1.70};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<int> random_labels(std::size_t n, int k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, k - 1);
  std::vector<int> out(n);
  for (auto& x : out) x = u(rng);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void c1(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  double worst_residual = 0, worst_trace = 0, worst_2x2 = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + static_cast<std::size_t>(i) * 62 / 199;
    const auto s = oracle::random_symmetric(n, rng);
    const auto e = eig_sym(s);
    double trace = 0, sum = 0;
    for (std::size_t j = 0; j < n; ++j) {
      trace += s(j, j);
      sum += e.values[j];
      for (std::size_t r = 0; r < n; ++r) {
        double sv = 0;
        for (std::size_t c = 0; c < n; ++c) sv += s(r, c) * e.vectors(c, j);
        worst_residual = std::max(worst_residual, std::abs(sv - e.values[j] * e.vectors(r, j)));
      }
    }
    worst_trace = std::max(worst_trace, std::abs(trace - sum));
    if (n == 2) {
      const auto [l1, l2] = oracle::eig2(s(0, 0), s(0, 1), s(1, 1));
      worst_2x2 = std::max({worst_2x2, std::abs(l1 - e.values[0]), std::abs(l2 - e.values[1])});
    }
  }
  // extra 2x2 cases so the closed-form comparison is not a single draw
  for (int i = 0; i < 50; ++i) {
    const auto s = oracle::random_symmetric(2, rng);
    const auto e = eig_sym(s);
    const auto [l1, l2] = oracle::eig2(s(0, 0), s(0, 1), s(1, 1));
    worst_2x2 = std::max({worst_2x2, std::abs(l1 - e.values[0]), std::abs(l2 - e.values[1])});
  }
  const double t = seconds_since(start);
  o.require(worst_residual < 1e-8, "residual");
  o.require(worst_trace < 1e-8, "trace");
  o.require(worst_2x2 < 1e-10, "2x2 roots");
  o.require(t < 10, "runtime");
  o.detail << "max residual " << worst_residual << ", max trace error " << worst_trace << ", max 2x2 error "
           << worst_2x2 << ", " << t << " s";
}

void c2(Outcome& o) {
  std::mt19937_64 rng(2);
  const auto raw = oracle::random_matrix(100, 20, rng);
  std::vector<std::string> names;
  for (int j = 0; j < 20; ++j) names.push_back("x" + std::to_string(j));
  const auto z = standardize(raw, names);
  const auto model = pca_fit(z.data);
  const auto scores = pca_project(model, z.data);
  double sum = 0;
  for (double l : model.eigenvalues) sum += l;
  double worst_var = 0;
  for (std::size_t j = 0; j < 20; ++j) {
    const auto col = scores.column(j);
    const double sd = sample_sd(col);
    worst_var = std::max(worst_var, std::abs(sd * sd - model.eigenvalues[j]));
  }
  const auto back = scores * model.components.transpose();
  double worst_rec = 0;
  for (std::size_t i = 0; i < 100; ++i)
    for (std::size_t j = 0; j < 20; ++j) worst_rec = std::max(worst_rec, std::abs(back(i, j) - z.data(i, j)));
  o.require(std::abs(sum - 20) < 1e-6, "eigenvalue sum");
  o.require(worst_var < 1e-6, "score variance");
  o.require(worst_rec < 1e-8, "reconstruction");
  o.detail << "sum " << sum << ", max variance error " << worst_var << ", max reconstruction error " << worst_rec;
}

void c3(Outcome& o) {
  const std::vector<double> ratios{28.35, 13.23, 6.87};
  const auto ev = explained_variance(ratios, 100.0);
  const double cumulative = ev.cumulative_pct.back();
  o.require(std::abs(cumulative - 48.45) < 1e-9, "cumulative 48.45");
  o.require(std::abs(cumulative - 48.46) <= 0.02, "within 0.02 of 48.46");
  const double total = kEigen[0] / (kVariancePct[0] / 100.0);
  const auto table = explained_variance(kEigen, total);
  double worst = 0;
  for (std::size_t i = 0; i < kEigen.size(); ++i)
    worst = std::max(worst, std::abs(table.ratio_pct[i] - kVariancePct[i]));
  o.require(worst <= 0.05, "variance column");
  o.detail << "cumulative " << cumulative << ", implied trace " << total << ", max column deviation " << worst
           << " pp";
}

void c4(Outcome& o) {
  const auto k = kaiser_count(kEigen), e = elbow_count(kEigen);
  o.require(k == 2, "kaiser");
  o.require(e == 2, "elbow");
  o.detail << "kaiser " << k << ", elbow " << e;
}

void c5(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> size(4, 8);
  int matched = 0;
  double worst_sil = 0;
  for (int f = 0; f < 100; ++f) {
    const int k = 2 + f % 2;
    const auto p = oracle::random_matrix(static_cast<std::size_t>(size(rng)), 2, rng);
    const double best = oracle::optimal_inertia(p, k);
    const auto r = kmeans(p, static_cast<std::size_t>(k), static_cast<std::uint64_t>(f), 32);
    if (std::abs(r.inertia - best) <= 1e-9 * std::max(1.0, best)) ++matched;
    worst_sil = std::max(worst_sil, std::abs(silhouette(p, r.assignments) - oracle::silhouette(p, r.assignments)));
  }
  const double t = seconds_since(start);
  o.require(matched >= 95, "optimum matches");
  o.require(worst_sil <= 1e-12, "silhouette");
  o.require(t < 30, "runtime");
  o.detail << matched << "/100 optimal, max silhouette error " << worst_sil << ", " << t << " s";
}

void c6(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  const auto p = make_blobs(1163, 3, 6.0, 6);
  const auto sweep = silhouette_sweep(p, 2, 10, 6, 32);
  const double t = seconds_since(start);
  double best_other = -1;
  for (const auto& e : sweep)
    if (e.k >= 3) best_other = std::max(best_other, e.silhouette);
  o.require(sweep.size() == 9 && sweep.front().k == 2, "sweep range");
  o.require(sweep.front().silhouette > best_other, "k = 2 peak");
  o.require(t < 20, "runtime");
  o.detail << "s(2) " << sweep.front().silhouette << ", best k>=3 " << best_other << ", " << t << " s";
}

void c7(Outcome& o) {
  {
    const auto p = make_blobs(1000, 3, 6.0, 71);
    const auto r = kmeans(p, 2, 71);
    const auto b = boundary_cases(p, r.centroids);
    std::vector<bool> flagged(p.rows(), false);
    for (auto i : b.indices) flagged[i] = true;
    double max_in = -INFINITY, min_out = INFINITY;
    for (std::size_t i = 0; i < p.rows(); ++i)
      (flagged[i] ? max_in : min_out) = flagged[i] ? std::max(max_in, b.deltas[i]) : std::min(min_out, b.deltas[i]);
    o.require(b.indices.size() >= 49 && b.indices.size() <= 51, "50 +- 1 flagged");
    o.require(max_in <= min_out, "delta ordering");
    o.detail << b.indices.size() << "/1000 flagged; ";
  }
  const std::size_t planted = 59, n = 1163;
  auto p = make_blobs(n - planted, 3, 6.0, 72);
  Matrix all(n, 3);
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t d = 0; d < 3; ++d) all(i, d) = p(i, d);
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> near(-0.05, 0.05);
  for (std::size_t i = p.rows(); i < n; ++i) {
    all(i, 0) = near(rng);
    all(i, 1) = standard_normal(rng);
    all(i, 2) = standard_normal(rng);
  }
  const auto r = kmeans(all, 2, 72);
  const auto b = boundary_cases(all, r.centroids);
  std::size_t recovered = 0;
  for (auto i : b.indices)
    if (i >= n - planted) ++recovered;
  o.require(static_cast<double>(recovered) >= 0.9 * planted, "planted recovery");
  o.detail << recovered << "/" << planted << " planted points among " << b.indices.size() << " flagged";
}

void c8(Outcome& o) {
  std::mt19937_64 rng(8);
  const auto a = random_labels(300, 4, rng);
  o.require(ari(a, a) == 1.0 && ami(a, a) == 1.0 && best_mapping_accuracy(a, a) == 1.0, "identity");
  std::vector<int> perm(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) perm[i] = (a[i] + 1) % 4;
  const auto b = random_labels(300, 3, rng);
  o.require(ari(perm, b) == ari(a, b) && ami(perm, b) == ami(a, b) &&
                best_mapping_accuracy(perm, b) == best_mapping_accuracy(a, b),
            "permutation");
  const auto x = random_labels(1000, 2, rng), y = random_labels(1000, 2, rng);
  const double noise = ari(x, y);
  o.require(std::abs(noise) < 0.05, "independent labels");

  // PC1 carries the clusters, PC2 and PC3 are noise
  Matrix pcs(1163, 3);
  for (std::size_t i = 0; i < pcs.rows(); ++i) {
    pcs(i, 0) = (i % 3 == 0 ? 2.5 : -2.5) + standard_normal(rng);
    pcs(i, 1) = 1.6 * standard_normal(rng);
    pcs(i, 2) = 1.2 * standard_normal(rng);
  }
  auto plane = [&](std::size_t c0, std::size_t c1) {
    const std::vector<std::size_t> cols{c0, c1};
    return kmeans(pcs.select_columns(cols), 2, 8).assignments;
  };
  const auto l12 = plane(0, 1), l13 = plane(0, 2), l23 = plane(1, 2);
  const double same = ari(l12, l13), cross = ari(l12, l23);
  o.require(same > 0.8, "PC1-PC2 vs PC1-PC3");
  o.require(cross < 0.2, "PC1-PC2 vs PC2-PC3");
  o.detail << "random ARI " << noise << ", ARI(12 vs 13) " << same << ", ARI(12 vs 23) " << cross;
}

void c9(Outcome& o) {
  const auto basic = parse_chat_file(kData / "basic.cha");
  const auto um = utterance_measures(basic);
  o.require(um.mlu_words == 2.5, "mlu_words");
  o.require(um.mlu_morphemes == 3.0 && utterance_measures(basic, true).mlu_morphemes == 3.5, "mlu_morphemes");
  o.require(lexical_measures(basic).freq_ttr == 1.0, "freq_ttr");
  o.require(std::abs(lexical_measures(parse_chat("*CHI:\ta b A c .\n")).freq_ttr - 0.75) < 1e-15, "freq_ttr ratio");
  // 5 words, 2 sentences, 6 syllables
  o.require(std::abs(flesch_kincaid(basic) - (0.39 * 2.5 + 11.8 * 1.2 - 15.59)) < 1e-12, "flesch_kincaid");
  o.require(std::abs(flesch_kincaid(parse_chat("*CHI:\tthe dog ran .\n")) + 2.62) < 1e-12, "flesch_kincaid -2.62");

  const auto markers = parse_chat_file(kData / "markers.cha");
  const auto m = morpheme_markers(markers);
  const std::vector<std::pair<int, int>> marker_checks{
      {m.present_progressive, 2}, {m.propositions_in, 1},      {m.propositions_on, 1},
      {m.plural_s, 2},            {m.irregular_past_tense, 1}, {m.possessive_s, 1},
      {m.uncontractible_copula, 1}, {m.articles, 6},           {m.regular_past_ed, 1},
      {m.regular_3rd_person_s, 2}, {m.irregular_3rd_person, 1}, {m.uncontractible_aux, 1},
      {m.contractible_copula, 1}, {m.contractible_aux, 1}};
  int marker_ok = 0;
  for (auto [got, want] : marker_checks) marker_ok += got == want;
  o.require(marker_ok == 14, "morpheme markers");

  const auto p = pos_patterns(markers);
  const std::vector<std::pair<int, int>> pattern_checks{{p.n_v, 2},     {p.n_aux, 1},   {p.n_3s_v, 1},
                                                        {p.det_n_pl, 1}, {p.det_pl_n, 1}, {p.pro_aux, 2},
                                                        {p.pro_3s_v, 2}, {p.n_dos, 1}};
  int pattern_ok = 0;
  for (auto [got, want] : pattern_checks) pattern_ok += got == want;
  o.require(pattern_ok == 8, "POS patterns");

  const auto f = fluency_and_errors(parse_chat_file(kData / "fluency.cha"));
  o.require(f.fillers == 3 && f.repetition == 1 && f.retracing == 1 && f.word_errors == 1 && f.total_error == 2,
            "fluency and errors");

  NGramOptions uni;
  uni.order = 1;
  uni.k = 0;
  uni.pad = false;
  const double pp_uniform =
      NGramModel::train(std::vector<TokenStream>{{"a", "b", "c", "d"}}, uni).perplexity(std::vector<TokenStream>{
          {"d", "c", "b", "a", "a"}});
  const double pp_certain =
      NGramModel::train(std::vector<TokenStream>{{"a", "a"}}, uni).perplexity(std::vector<TokenStream>{{"a"}});
  NGramOptions bi;
  bi.order = 2;
  bi.k = 1;
  // <s> a b </s> over {a, b, </s>, <unk>}: every step (1 + 1) / (1 + 4)
  const double pp_bigram =
      NGramModel::train(std::vector<TokenStream>{{"a", "b"}}, bi).perplexity(std::vector<TokenStream>{{"a", "b"}});
  o.require(std::abs(pp_uniform - 4) < 1e-9, "uniform PP");
  o.require(std::abs(pp_certain - 1) < 1e-9, "certain PP");
  o.require(std::abs(pp_bigram - 2.5) < 1e-9, "add-one bigram PP");
  o.detail << "markers " << marker_ok << "/14, patterns " << pattern_ok << "/8, PP " << pp_uniform << " / "
           << pp_bigram << " / " << pp_certain;
}

void c10(Outcome& o) {
  // [2, 4] vs [0, 2]: both variances 2, t = 2 / sqrt(2), df = 2, p = 1 - t / sqrt(2 + t^2)
  const std::vector<double> a{2, 4}, b{0, 2};
  const auto w = welch_t_test(a, b);
  const double t = std::sqrt(2.0);
  o.require(std::abs(w.t - t) < 1e-6 && std::abs(w.df - 2) < 1e-6, "t and df");
  o.require(std::abs(w.p_value - (1 - t / std::sqrt(2 + t * t))) < 1e-6, "closed-form p");
  o.require(std::abs(cohens_d(a, b) - std::sqrt(2.0)) < 1e-6, "cohens d");

  const std::vector<double> c{1, 2, 3, 4}, d{2, 4, 6};
  const auto w2 = welch_t_test(c, d);
  // means 2.5 and 4, variances 5/3 and 4
  const double se2 = (5.0 / 3) / 4 + 4.0 / 3;
  const double t2 = (2.5 - 4) / std::sqrt(se2);
  const double df2 = se2 * se2 / (std::pow((5.0 / 3) / 4, 2) / 3 + std::pow(4.0 / 3, 2) / 2);
  const double d2 = (2.5 - 4) / std::sqrt((3 * (5.0 / 3) + 2 * 4.0) / 5);
  o.require(std::abs(w2.t - t2) < 1e-6 && std::abs(w2.df - df2) < 1e-6, "unequal t and df");
  o.require(std::abs(w2.p_value - oracle::student_t_two_sided(t2, df2)) < 1e-6, "unequal p");
  o.require(std::abs(cohens_d(c, d) - d2) < 1e-6, "unequal d");

  const auto same = welch_t_test(c, c);
  o.require(cohens_d(c, c) == 0 && same.p_value == 1, "identical groups");

  const std::vector<int> labels{0, 0, 0, 1, 1}, outcomes{1, 1, 1, 0, 1};
  Matrix scores(5, 3, 0.0);
  const auto profiles = cluster_profiles(labels, scores, outcomes);
  o.require(profiles.size() == 2 && profiles[0].y_ratio == 1.0, "all-SLI Y_ratio");
  o.detail << "p " << w.p_value << ", unequal p " << w2.p_value << " vs oracle "
           << oracle::student_t_two_sided(t2, df2);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + LANGPROFILE_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void c11(Outcome& o) {
  fs::remove_all(kScratch);
  fs::create_directories(kScratch);
  const auto conf = (kRepoData / "example.conf").string();
  const auto dir_a = kScratch / "a", dir_b = kScratch / "b";
  const int ra = run_cli("analyze -c \"" + conf + "\" -o \"" + dir_a.string() + "\"");
  const int rb = run_cli("analyze -c \"" + conf + "\" -o \"" + dir_b.string() + "\"");
  o.require(ra == 0 && rb == 0, "exit status");
  std::size_t files = 0, identical = 0;
  if (fs::exists(dir_a))
    for (const auto& e : fs::directory_iterator(dir_a)) {
      ++files;
      const auto other = dir_b / e.path().filename();
      if (fs::exists(other) && slurp(e.path()) == slurp(other)) ++identical;
    }
  std::size_t files_b = 0;
  if (fs::exists(dir_b))
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_b)) ++files_b;
  o.require(files > 0 && files == identical && files == files_b, "byte-identical bundles");
  o.detail << identical << "/" << files << " files identical";
  fs::remove_all(kScratch);
}

void c12(Outcome& o) {
  auto config = load_config(kRepoData / "example.conf");
  const auto bundle = build_reports(config, ingest_feature_csv(config.input_path));
  const auto pca = json::parse(bundle.at("pca_report.json"));
  const auto cluster = json::parse(bundle.at("cluster_report.json"));
  const auto boundary = json::parse(bundle.at("boundary_report.json"));
  int missing = 0;
  auto need = [&](const json& obj, const std::vector<std::string>& keys, const std::string& where) {
    for (const auto& k : keys)
      if (!obj.is_object() || !obj.contains(k)) {
        ++missing;
        o.detail << "missing " << where << "." << k << "; ";
      }
  };
  auto need_each = [&](const json& arr, const std::vector<std::string>& keys, const std::string& where) {
    if (!arr.is_array() || arr.empty()) {
      ++missing;
      o.detail << "empty " << where << "; ";
      return;
    }
    for (const auto& e : arr) need(e, keys, where);
  };
  need(pca, {"components", "kaiser_count", "elbow_count"}, "pca");
  need_each(pca.value("components", json()), {"component", "eigenvalue", "variance_pct", "cumulative_pct"},
            "components");
  need(boundary, {"components", "n_boundary", "PC1_mean", "PC1_sd", "outcome_ratio"}, "boundary");
  need_each(boundary.value("components", json()), {"component", "mean", "sd"}, "boundary.components");
  need(cluster, {"clinical_features", "cluster_agreement", "cluster_profiles"}, "cluster");
  need_each(cluster.value("clinical_features", json()), {"feature", "mean_a", "mean_b", "p_value", "cohens_d"},
            "clinical_features");
  need_each(cluster.value("cluster_agreement", json()),
            {"comparison", "adjusted_rand_index", "adjusted_mutual_information", "accuracy_best_mapping"},
            "cluster_agreement");
  need_each(cluster.value("cluster_profiles", json()), {"cluster", "size", "PC1_mean", "PC2_mean", "PC3_mean", "Y_ratio"},
            "cluster_profiles");
  const auto agreement = cluster.value("cluster_agreement", json::array());
  o.require(agreement.size() == 3, "three plane comparisons");
  o.require(missing == 0, "report fields");
  o.detail << "all table fields present (" << agreement.size() << " plane comparisons); corpus comparison is user-side";
}

}  // namespace

int main() {
  const std::vector<std::function<void(Outcome&)>> criteria{c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i](o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    if (!o.pass) ++failures;
    std::printf("Criterion %zu: %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
  }
  return failures == 0 ? 0 : 1;
}
