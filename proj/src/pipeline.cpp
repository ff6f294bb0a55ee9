#include "langprofile/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "langprofile/clustering.hpp"
#include "langprofile/error.hpp"
#include "langprofile/ngram.hpp"
#include "langprofile/numerics.hpp"
#include "langprofile/numfmt.hpp"
#include "langprofile/stats.hpp"

namespace langprofile {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  for (auto& item : split(s, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void bad_config(const std::string& what) { throw Error(ErrorCode::BadConfig, what); }

bool parse_bool(const std::string& key, const std::string& v) {
  const auto l = lower(v);
  if (l == "true" || l == "yes" || l == "1" || l == "on") return true;
  if (l == "false" || l == "no" || l == "0" || l == "off") return false;
  bad_config(key + ": expected a boolean, got '" + v + "'");
}

template <class T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_config(key + ": expected an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  const auto d = parse_double(v);
  if (!d || !std::isfinite(*d)) bad_config(key + ": expected a number, got '" + v + "'");
  return *d;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

Group parse_group_cell(const std::string& cell, std::size_t row) {
  const auto l = lower(trim(cell));
  if (l == "sli") return Group::SLI;
  if (l == "td") return Group::TD;
  if (l.empty() || l == "unknown") return Group::Unknown;
  throw Error(ErrorCode::NonNumericCell, "row " + std::to_string(row) + ", column group: '" + cell + "' is not SLI, TD or empty");
}

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + name + ": " + e.message());
  }
}

json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round_significant(x, 10);
}

std::string csv_num(double x) {
  if (!std::isfinite(x)) return "";
  return format_double(round_significant(x, 10));
}

std::string pc_name(std::size_t j) { return "PC" + std::to_string(j + 1); }

json header(const PipelineConfig& cfg) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["config_hash"] = cfg.hash();
  j["seed"] = *cfg.seed;
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json agreement(std::span<const int> a, std::span<const int> b) {
  json j;
  j["adjusted_rand_index"] = num(ari(a, b));
  j["adjusted_mutual_information"] = num(ami(a, b));
  j["accuracy_best_mapping"] = num(best_mapping_accuracy(a, b));
  return j;
}

double auto_dbscan_eps(const Matrix& x, std::size_t min_pts) {
  std::vector<double> kdist;
  std::vector<double> d;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    d.clear();
    for (std::size_t j = 0; j < x.rows(); ++j)
      if (j != i) d.push_back(distance(x.row(i), x.row(j)));
    if (d.empty()) continue;
    const std::size_t nth = std::min(min_pts, d.size()) - 1;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(nth), d.end());
    kdist.push_back(d[nth]);
  }
  if (kdist.empty()) return 1.0;
  return std::max(percentile(kdist, 95), 1e-12);
}

}  // namespace

std::string PipelineConfig::canonical() const {
  std::vector<std::string> lines;
  auto add = [&](const std::string& key, const std::string& value) { lines.push_back(key + "=" + value); };
  add("input.mode", mode == InputMode::Transcripts ? "transcripts" : "features");
  add("input.path", input_path.lexically_normal().generic_string());
  add("features.count_fusions", count_fusions ? "true" : "false");
  add("features.dss_table", dss_table ? dss_table->lexically_normal().generic_string() : "default");
  add("features.ipsyn_table", ipsyn_table ? ipsyn_table->lexically_normal().generic_string() : "default");
  add("features.error_postcodes", join({error_postcodes.begin(), error_postcodes.end()}, ","));
  add("lm.k", format_double(lm_k));
  add("lm.unk_threshold", std::to_string(lm_unk_threshold));
  add("lm.loo", lm_loo ? "true" : "false");
  add("prune.threshold", format_double(prune_threshold));
  add("pca.top_k", std::to_string(pca_top_k));
  add("pca.report_components", std::to_string(pca_report_components));
  add("clustering.k_min", std::to_string(k_min));
  add("clustering.k_max", std::to_string(k_max));
  add("clustering.seed", seed ? std::to_string(*seed) : "none");
  add("clustering.n_init", std::to_string(n_init));
  add("clustering.percentile", format_double(percentile));
  add("clustering.pc_dims", std::to_string(pc_dims));
  add("clustering.dbscan_eps", dbscan_eps ? format_double(*dbscan_eps) : "auto");
  add("clustering.dbscan_min_pts", std::to_string(dbscan_min_pts));
  add("clustering.compare_features", join(compare_features, ","));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string PipelineConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExtractOptions PipelineConfig::extract_options() const {
  ExtractOptions o;
  o.count_fusions = count_fusions;
  o.error_postcodes = error_postcodes;
  if (dss_table) o.dss_table = ScoringTable::parse(read_file(*dss_table));
  if (ipsyn_table) o.ipsyn_table = ScoringTable::parse(read_file(*ipsyn_table));
  return o;
}

PipelineConfig parse_config(std::string_view text, const fs::path& base_dir) {
  PipelineConfig c;
  bool have_path = false;
  std::string section;
  auto resolve = [&](const std::string& v) {
    fs::path p(v);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad_config("line " + std::to_string(line_no) + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      static const std::set<std::string> known{"input", "features", "lm", "prune", "pca", "clustering", "output"};
      if (!known.count(section)) bad_config("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad_config("line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    const auto full = section + "." + key;

    if (full == "input.mode") {
      const auto m = lower(value);
      if (m == "transcripts") c.mode = PipelineConfig::InputMode::Transcripts;
      else if (m == "features") c.mode = PipelineConfig::InputMode::Features;
      else bad_config("input.mode must be 'transcripts' or 'features'");
    } else if (full == "input.path") {
      c.input_path = resolve(value);
      have_path = true;
    } else if (full == "features.count_fusions") {
      c.count_fusions = parse_bool(full, value);
    } else if (full == "features.dss_table") {
      c.dss_table = resolve(value);
    } else if (full == "features.ipsyn_table") {
      c.ipsyn_table = resolve(value);
    } else if (full == "features.error_postcodes") {
      const auto items = split_list(value);
      c.error_postcodes = {items.begin(), items.end()};
    } else if (full == "lm.k") {
      c.lm_k = parse_real(full, value);
    } else if (full == "lm.unk_threshold") {
      c.lm_unk_threshold = parse_integer<int>(full, value);
    } else if (full == "lm.loo") {
      c.lm_loo = parse_bool(full, value);
    } else if (full == "prune.threshold") {
      c.prune_threshold = parse_real(full, value);
    } else if (full == "pca.top_k") {
      c.pca_top_k = parse_integer<std::size_t>(full, value);
    } else if (full == "pca.report_components") {
      c.pca_report_components = parse_integer<std::size_t>(full, value);
    } else if (full == "clustering.k_min") {
      c.k_min = parse_integer<std::size_t>(full, value);
    } else if (full == "clustering.k_max") {
      c.k_max = parse_integer<std::size_t>(full, value);
    } else if (full == "clustering.seed") {
      c.seed = parse_integer<std::uint64_t>(full, value);
    } else if (full == "clustering.n_init") {
      c.n_init = parse_integer<std::size_t>(full, value);
    } else if (full == "clustering.percentile") {
      c.percentile = parse_real(full, value);
    } else if (full == "clustering.pc_dims") {
      c.pc_dims = parse_integer<std::size_t>(full, value);
    } else if (full == "clustering.dbscan_eps") {
      if (lower(value) == "auto") c.dbscan_eps.reset();
      else c.dbscan_eps = parse_real(full, value);
    } else if (full == "clustering.dbscan_min_pts") {
      c.dbscan_min_pts = parse_integer<std::size_t>(full, value);
    } else if (full == "clustering.compare_features") {
      c.compare_features = split_list(value);
    } else if (full == "output.dir") {
      c.output_dir = resolve(value);
    } else {
      bad_config("line " + std::to_string(line_no) + ": unknown key '" + full + "'");
    }
  }

  if (const char* env = std::getenv(kSeedEnvVar); env && *env) c.seed = parse_integer<std::uint64_t>(kSeedEnvVar, env);

  if (!have_path) bad_config("input.path is required");
  if (!c.seed) bad_config("clustering.seed is required");
  if (c.k_min < 2 || c.k_max < c.k_min) bad_config("k range must satisfy 2 <= k_min <= k_max");
  if (!(c.percentile > 0 && c.percentile < 50)) bad_config("clustering.percentile must be in (0, 50)");
  if (c.n_init == 0) bad_config("clustering.n_init must be positive");
  if (c.pc_dims == 0) bad_config("clustering.pc_dims must be positive");
  if (c.dbscan_min_pts == 0) bad_config("clustering.dbscan_min_pts must be positive");
  if (c.dbscan_eps && !(*c.dbscan_eps > 0)) bad_config("clustering.dbscan_eps must be positive");
  if (!(c.prune_threshold > 0 && c.prune_threshold <= 1)) bad_config("prune.threshold must be in (0, 1]");
  if (!(c.lm_k >= 0)) bad_config("lm.k must be non-negative");
  if (c.lm_unk_threshold < 1) bad_config("lm.unk_threshold must be at least 1");
  for (const auto& f : c.compare_features)
    if (!is_feature(f)) bad_config("clustering.compare_features: unknown feature '" + f + "'");
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  return parse_config(read_file(path), path.parent_path());
}

std::vector<int> FeatureTable::outcomes() const {
  std::vector<int> out;
  for (auto g : groups) out.push_back(g == Group::SLI ? 1 : g == Group::TD ? 0 : -1);
  return out;
}

std::string write_feature_csv(const FeatureTable& t) {
  std::string out = "id,corpus,group,age_months,sex";
  for (auto name : feature_names()) out += "," + std::string(name);
  out += "\n";
  for (std::size_t r = 0; r < t.rows(); ++r) {
    out += t.ids[r] + "," + t.corpora[r] + "," + (t.groups[r] == Group::Unknown ? "" : std::string(to_string(t.groups[r])));
    out += "," + (std::isfinite(t.age_months[r]) ? format_double(t.age_months[r]) : std::string());
    out += "," + t.sexes[r];
    for (std::size_t c = 0; c < t.values.cols(); ++c) {
      out += ",";
      if (std::isfinite(t.values(r, c))) out += format_double(t.values(r, c));
    }
    out += "\n";
  }
  return out;
}

FeatureTable parse_feature_csv(std::string_view text) {
  auto lines = split(text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorCode::SchemaMismatch, "empty feature file");

  auto header = split(lines[0], ',');
  for (auto& h : header) h = trim(h);
  std::vector<std::string> expected{"id", "corpus", "group", "age_months", "sex"};
  for (auto name : feature_names()) expected.emplace_back(name);
  if (header != expected) {
    std::vector<std::string> missing, extra, misplaced;
    for (const auto& e : expected)
      if (std::find(header.begin(), header.end(), e) == header.end()) missing.push_back(e);
    for (const auto& h : header)
      if (std::find(expected.begin(), expected.end(), h) == expected.end()) extra.push_back(h);
    std::string msg = "feature CSV header does not match the schema";
    if (!missing.empty()) msg += "; missing: " + join(missing, ", ");
    if (!extra.empty()) msg += "; extra: " + join(extra, ", ");
    if (missing.empty() && extra.empty()) msg += "; columns are out of order";
    throw Error(ErrorCode::SchemaMismatch, msg);
  }

  FeatureTable t;
  const std::size_t width = expected.size();
  std::vector<std::vector<double>> rows;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const std::size_t row = rows.size() + 1;
    auto cells = split(lines[li], ',');
    if (cells.size() != width)
      throw Error(ErrorCode::SchemaMismatch, "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                                 " cells, expected " + std::to_string(width));
    t.ids.push_back(trim(cells[0]));
    t.corpora.push_back(trim(cells[1]));
    t.groups.push_back(parse_group_cell(cells[2], row));
    const auto age = trim(cells[3]);
    if (age.empty()) {
      t.age_months.push_back(std::nan(""));
    } else if (auto v = parse_double(age)) {
      t.age_months.push_back(*v);
    } else {
      throw Error(ErrorCode::NonNumericCell, "row " + std::to_string(row) + ", column age_months: '" + age + "'");
    }
    t.sexes.push_back(trim(cells[4]));
    std::vector<double> values;
    for (std::size_t c = kMetadataColumns; c < width; ++c) {
      const auto cell = trim(cells[c]);
      if (cell.empty() || lower(cell) == "nan" || lower(cell) == "na") {
        values.push_back(std::nan(""));
        ++t.missing_cells;
        continue;
      }
      const auto v = parse_double(cell);
      if (!v || std::isinf(*v))
        throw Error(ErrorCode::NonNumericCell,
                    "row " + std::to_string(row) + ", column " + expected[c] + ": '" + cell + "'");
      values.push_back(*v);
    }
    rows.push_back(std::move(values));
  }
  t.values = Matrix(rows.size(), feature_count());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < feature_count(); ++c) t.values(r, c) = rows[r][c];
  return t;
}

FeatureTable ingest_feature_csv(const fs::path& path) { return parse_feature_csv(read_file(path)); }

std::vector<Transcript> load_transcripts(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".cha") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::EmptyCorpus, "no .cha files under " + dir.string());
  std::vector<Transcript> out;
  for (const auto& f : files) {
    try {
      out.push_back(parse_chat_file(f));
    } catch (const Error& e) {
      throw Error(e.code(), f.filename().string() + ": " + e.message());
    }
  }
  return out;
}

FeatureTable extract_features(const std::vector<Transcript>& corpus, const ExtractOptions& opts, const LmOptions& lm) {
  const auto models = train_group_models(corpus, lm.k, lm.unk_threshold);
  std::vector<FeatureVector> vectors;
  std::vector<Group> groups;
  FeatureTable t;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& tr = corpus[i];
    PerplexityModels own = models;
    if (lm.loo && tr.group != Group::Unknown) {
      auto& slot = tr.group == Group::SLI ? own.sli : own.td;
      if (lm.unk_threshold <= 1) {
        for (auto& m : slot) m = m.without(tr);
      } else {
        std::vector<Transcript> rest;
        for (std::size_t j = 0; j < corpus.size(); ++j)
          if (j != i) rest.push_back(corpus[j]);
        own = train_group_models(rest, lm.k, lm.unk_threshold);
        (tr.group == Group::SLI ? own.td : own.sli) = tr.group == Group::SLI ? models.td : models.sli;
      }
    }
    try {
      vectors.push_back(extract_base(tr, own, opts));
    } catch (const Error& e) {
      throw Error(e.code(), tr.id + ": " + e.message());
    }
    groups.push_back(tr.group);
    for (const auto& w : tr.warnings) t.warnings.push_back(tr.id + ": " + w);
    for (const auto& f : vectors.back().flags) t.warnings.push_back(tr.id + ": " + f + " computed in degraded mode");
  }
  const auto stats = compute_group_stats(vectors, groups);
  t.values = Matrix(corpus.size(), feature_count());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    apply_zscores(vectors[i], stats);
    const auto& tr = corpus[i];
    t.ids.push_back(tr.id);
    t.corpora.push_back(tr.corpus);
    t.groups.push_back(tr.group);
    t.age_months.push_back(tr.age_months ? static_cast<double>(*tr.age_months) : std::nan(""));
    t.sexes.push_back(tr.sex ? (*tr.sex == Sex::M ? "male" : "female") : "");
    for (std::size_t c = 0; c < feature_count(); ++c) t.values(i, c) = vectors[i].values[c];
  }
  return t;
}

ReportBundle build_reports(const PipelineConfig& config) {
  const auto table = stage("input", [&] {
    if (config.mode == PipelineConfig::InputMode::Features) return ingest_feature_csv(config.input_path);
    const auto corpus = load_transcripts(config.input_path);
    return extract_features(corpus, config.extract_options(),
                            LmOptions{config.lm_k, config.lm_unk_threshold, config.lm_loo});
  });
  return build_reports(config, table);
}

ReportBundle build_reports(const PipelineConfig& config, const FeatureTable& table) {
  if (!config.seed) throw Error(ErrorCode::BadConfig, "seed is required");
  const std::uint64_t seed = *config.seed;
  const std::size_t n = table.rows();
  if (n < 3) throw Error(ErrorCode::DegenerateInput, "stage input: at least three rows are needed");
  if (config.k_max > n - 1)
    throw Error(ErrorCode::BadConfig, "k_max = " + std::to_string(config.k_max) + " exceeds n - 1 = " + std::to_string(n - 1));
  const auto outcomes = table.outcomes();
  std::vector<std::string> names;
  for (auto f : feature_names()) names.emplace_back(f);

  Matrix imputed = table.values;
  const std::size_t imputed_cells = impute_column_means(imputed);

  const auto std_data = stage("standardize", [&] { return standardize(imputed, names); });
  const auto kept = stage("prune", [&] { return prune_correlated(std_data.data, config.prune_threshold); });
  std::vector<std::string> retained, pruned;
  std::vector<double> r_means, r_sds;
  for (std::size_t j = 0; j < std_data.names.size(); ++j) {
    if (std::find(kept.begin(), kept.end(), j) != kept.end()) {
      retained.push_back(std_data.names[j]);
      r_means.push_back(std_data.means[j]);
      r_sds.push_back(std_data.sds[j]);
    } else {
      pruned.push_back(std_data.names[j]);
    }
  }
  const Matrix data = std_data.data.select_columns(kept);

  const auto model = stage("pca", [&] { return pca_fit(data, retained, r_means, r_sds); });
  const Matrix scores = pca_project(model, data);
  const std::size_t ncomp = scores.cols();
  const std::size_t m = std::min(config.pc_dims, ncomp);
  std::vector<std::size_t> dims(m);
  for (std::size_t j = 0; j < m; ++j) dims[j] = j;
  const Matrix x = scores.select_columns(dims);

  const auto sweep = stage("silhouette_sweep",
                           [&] { return silhouette_sweep(x, config.k_min, config.k_max, seed, config.n_init); });
  std::size_t chosen = sweep.front().k;
  double best_s = sweep.front().silhouette;
  for (const auto& e : sweep)
    if (e.silhouette > best_s) best_s = e.silhouette, chosen = e.k;

  const auto fit = stage("kmeans", [&] { return kmeans(x, chosen, seed, config.n_init); });

  const auto ward = stage("ward", [&] { return ward_linkage(x, chosen); });
  const double eps = config.dbscan_eps ? *config.dbscan_eps : auto_dbscan_eps(x, config.dbscan_min_pts);
  const auto db = stage("dbscan", [&] { return dbscan(x, eps, config.dbscan_min_pts); });

  const auto boundary =
      stage("boundary_cases", [&] { return boundary_cases(x, fit.centroids, outcomes, config.percentile); });
  const auto outliers = stage("outliers", [&] { return detect_outliers(x, fit.centroids, fit.assignments); });

  json planes = json::array();
  stage("agreement", [&] {
    if (ncomp < 3) return;
    const std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 1}, {0, 2}, {1, 2}};
    std::vector<std::vector<int>> labels;
    std::vector<std::string> plane_names;
    for (auto [a, b] : pairs) {
      const std::vector<std::size_t> cols{a, b};
      labels.push_back(kmeans(scores.select_columns(cols), chosen, seed, config.n_init).assignments);
      plane_names.push_back(pc_name(a) + "-" + pc_name(b));
    }
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i + 1; j < 3; ++j) {
        json e;
        e["comparison"] = plane_names[i] + " vs " + plane_names[j];
        e.update(agreement(labels[i], labels[j]));
        planes.push_back(e);
      }
  });

  const auto profiles = stage("profiles", [&] { return cluster_profiles(fit.assignments, scores, outcomes); });
  const auto effects =
      stage("effects", [&] { return compare_features(imputed, names, fit.assignments, config.compare_features); });

  ReportBundle bundle;
  bundle["feature_matrix.csv"] = write_feature_csv(table);

  // PCA report
  {
    json j = header(config);
    j["n_rows"] = n;
    j["missing_cells"] = table.missing_cells;
    j["imputed_cells"] = imputed_cells;
    j["dropped_constant"] = std_data.dropped;
    j["pruned_features"] = pruned;
    j["prune_threshold"] = num(config.prune_threshold);
    j["retained_features"] = retained;

    json desc = json::array();
    for (std::size_t c = 0; c < names.size(); ++c) {
      std::vector<double> col;
      for (std::size_t r = 0; r < n; ++r)
        if (std::isfinite(table.values(r, c))) col.push_back(table.values(r, c));
      json d;
      d["feature"] = names[c];
      d["mean"] = col.empty() ? json(nullptr) : num(mean(col));
      d["sd"] = col.size() < 2 ? json(nullptr) : num(sample_sd(col));
      d["min"] = col.empty() ? json(nullptr) : num(*std::min_element(col.begin(), col.end()));
      d["max"] = col.empty() ? json(nullptr) : num(*std::max_element(col.begin(), col.end()));
      d["n"] = col.size();
      desc.push_back(d);
    }
    j["descriptive_statistics"] = desc;

    const auto ev = explained_variance(model.eigenvalues);
    double total = 0;
    for (double l : model.eigenvalues) total += l;
    j["total_variance"] = num(total);
    j["kaiser_count"] = kaiser_count(model.eigenvalues);
    j["elbow_count"] = model.eigenvalues.size() >= 3 ? json(elbow_count(model.eigenvalues)) : json(nullptr);
    json comps = json::array();
    for (std::size_t c = 0; c < model.eigenvalues.size(); ++c) {
      json e;
      e["component"] = pc_name(c);
      e["eigenvalue"] = num(model.eigenvalues[c]);
      e["variance_pct"] = num(ev.ratio_pct[c]);
      e["cumulative_pct"] = num(ev.cumulative_pct[c]);
      e["retained"] = model.eigenvalues[c] > 1.0;
      comps.push_back(e);
    }
    j["components"] = comps;

    json top = json::array();
    for (const auto& cl : loadings_report(model, config.pca_top_k, config.pca_report_components)) {
      json e;
      e["component"] = pc_name(cl.component);
      json feats = json::array();
      for (const auto& [f, l] : cl.top) feats.push_back({{"feature", f}, {"loading", num(l)}});
      e["features"] = feats;
      top.push_back(e);
    }
    j["top_loadings"] = top;

    // loadings on the first three components, sorted by |PC1|
    json table3 = json::array();
    std::vector<std::size_t> order(model.retained_features.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(model.components(a, 0)) > std::abs(model.components(b, 0));
    });
    for (auto i : order) {
      json e;
      e["feature"] = model.retained_features[i];
      for (std::size_t c = 0; c < std::min<std::size_t>(3, ncomp); ++c) e[pc_name(c)] = num(model.components(i, c));
      table3.push_back(e);
    }
    j["loadings"] = table3;

    json cstats = json::array();
    const auto stats = component_stats(scores, config.pca_report_components);
    for (std::size_t c = 0; c < stats.size(); ++c) {
      const auto& s = stats[c];
      cstats.push_back({{"component", pc_name(c)}, {"mean", num(s.mean)}, {"sd", num(s.sd)}, {"min", num(s.min)},
                        {"q25", num(s.q25)}, {"median", num(s.median)}, {"q75", num(s.q75)}, {"max", num(s.max)}});
    }
    j["component_statistics"] = cstats;
    bundle["pca_report.json"] = dump(j);
  }

  // cluster report
  {
    json j = header(config);
    j["pc_dims"] = m;
    j["k_range"] = {config.k_min, config.k_max};
    json sw = json::array();
    for (const auto& e : sweep) sw.push_back({{"k", e.k}, {"silhouette", num(e.silhouette)}, {"inertia", num(e.inertia)}});
    j["silhouette_sweep"] = sw;
    j["chosen_k"] = chosen;
    j["n_init"] = config.n_init;
    j["inertia"] = num(fit.inertia);
    j["iterations"] = fit.iterations;

    json prof = json::array();
    for (const auto& p : profiles) {
      json e;
      e["cluster"] = p.cluster;
      e["size"] = p.size;
      for (std::size_t c = 0; c < 3; ++c) e[pc_name(c) + "_mean"] = c < p.pc_means.size() ? num(p.pc_means[c]) : json(nullptr);
      e["Y_ratio"] = num(p.y_ratio);
      prof.push_back(e);
    }
    j["cluster_profiles"] = prof;
    j["cluster_agreement"] = planes;

    json eff = json::array();
    for (const auto& e : effects)
      eff.push_back({{"feature", e.feature},
                     {"cluster_a", e.cluster_a},
                     {"cluster_b", e.cluster_b},
                     {"mean_a", num(e.mean_a)},
                     {"mean_b", num(e.mean_b)},
                     {"t", num(e.t)},
                     {"df", num(e.df)},
                     {"p_value", num(e.p_value)},
                     {"cohens_d", num(e.cohens_d)}});
    j["clinical_features"] = eff;

    json checks;
    checks["ward"] = agreement(fit.assignments, ward.assignments);
    std::set<int> db_clusters;
    std::size_t noise = 0;
    for (int l : db) {
      if (l < 0) ++noise;
      else db_clusters.insert(l);
    }
    json dbj;
    dbj["eps"] = num(eps);
    dbj["min_pts"] = config.dbscan_min_pts;
    dbj["n_clusters"] = db_clusters.size();
    dbj["n_noise"] = noise;
    dbj.update(agreement(fit.assignments, db));
    checks["dbscan"] = dbj;
    j["cross_checks"] = checks;

    json out_ids = json::array();
    for (auto i : outliers) out_ids.push_back(table.ids[i]);
    j["outliers"] = {{"count", outliers.size()}, {"indices", outliers}, {"ids", out_ids}};
    bundle["cluster_report.json"] = dump(j);
  }

  // boundary report
  {
    json j = header(config);
    j["percentile"] = num(boundary.percentile);
    j["threshold"] = num(boundary.threshold);
    j["n_boundary"] = boundary.indices.size();
    j["fraction"] = num(static_cast<double>(boundary.indices.size()) / static_cast<double>(n));
    json comps = json::array();
    for (std::size_t c = 0; c < boundary.dim_mean.size(); ++c)
      comps.push_back({{"component", pc_name(c)}, {"mean", num(boundary.dim_mean[c])}, {"sd", num(boundary.dim_sd[c])}});
    j["components"] = comps;
    j["PC1_mean"] = num(boundary.pc1_mean);
    j["PC1_sd"] = num(boundary.pc1_sd);
    j["outcome_ratio"] = num(boundary.outcome_ratio);
    json ids = json::array();
    for (auto i : boundary.indices) ids.push_back(table.ids[i]);
    j["indices"] = boundary.indices;
    j["ids"] = ids;
    bundle["boundary_report.json"] = dump(j);
  }

  // plot CSVs
  {
    std::set<std::size_t> flagged(boundary.indices.begin(), boundary.indices.end());
    std::set<std::size_t> out_set(outliers.begin(), outliers.end());
    const std::size_t shown = std::min(ncomp, std::max<std::size_t>(m, 3));
    std::string csv = "id,group,cluster,boundary,outlier,delta";
    for (std::size_t c = 0; c < shown; ++c) csv += "," + pc_name(c);
    csv += "\n";
    for (std::size_t r = 0; r < n; ++r) {
      csv += table.ids[r] + "," + (table.groups[r] == Group::Unknown ? "" : std::string(to_string(table.groups[r])));
      csv += "," + std::to_string(fit.assignments[r]) + "," + (flagged.count(r) ? "1" : "0") + "," +
             (out_set.count(r) ? "1" : "0") + "," + csv_num(boundary.deltas[r]);
      for (std::size_t c = 0; c < shown; ++c) csv += "," + csv_num(scores(r, c));
      csv += "\n";
    }
    bundle["pc_scores.csv"] = csv;

    std::string sw = "k,silhouette,inertia\n";
    for (const auto& e : sweep) sw += std::to_string(e.k) + "," + csv_num(e.silhouette) + "," + csv_num(e.inertia) + "\n";
    bundle["silhouette_sweep.csv"] = sw;
  }
  return bundle;
}

void write_bundle(const ReportBundle& bundle, const fs::path& dir) {
  std::vector<fs::path> written;
  try {
    fs::create_directories(dir);
    for (const auto& [name, content] : bundle) {
      const auto path = dir / name;
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
      written.push_back(path);
      out << content;
      out.close();
      if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
}

ReportBundle run_pipeline(const PipelineConfig& config) {
  if (config.output_dir.empty()) throw Error(ErrorCode::BadConfig, "output.dir is required");
  auto bundle = build_reports(config);
  stage("emit", [&] { write_bundle(bundle, config.output_dir); });
  return bundle;
}

namespace {

std::string fmt6(const json& v) {
  if (v.is_null()) return "NA";
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
    return buf;
  }
  if (v.is_string()) return v.get<std::string>();
  std::string out;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt6(v[i]);
    return out;
  }
  return v.dump();
}

bool is_table(const json& v) {
  if (!v.is_array() || v.empty()) return false;
  for (const auto& e : v)
    if (!e.is_object()) return false;
  return true;
}

void render_table(std::ostringstream& out, const std::string& title, const json& rows) {
  std::vector<std::string> cols;
  for (const auto& row : rows)
    for (const auto& [k, val] : row.items())
      if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> width;
  for (const auto& c : cols) width.push_back(c.size());
  for (const auto& row : rows) {
    std::vector<std::string> line;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      std::string s;
      if (row.contains(cols[c])) {
        const auto& v = row[cols[c]];
        if (is_table(v)) {
          for (const auto& inner : v) {
            std::string part;
            for (const auto& [k, iv] : inner.items()) part += (part.empty() ? "" : "=") + fmt6(iv);
            s += (s.empty() ? "" : "; ") + part;
          }
        } else {
          s = fmt6(v);
        }
      }
      width[c] = std::max(width[c], s.size());
      line.push_back(std::move(s));
    }
    cells.push_back(std::move(line));
  }
  out << title << "\n";
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      out << (c ? "  " : "  ") << line[c];
      if (c + 1 < line.size()) out << std::string(width[c] - line[c].size(), ' ');
    }
    out << "\n";
  };
  emit(cols);
  for (const auto& line : cells) emit(line);
  out << "\n";
}

void render_value(std::ostringstream& out, const std::string& key, const json& v) {
  if (is_table(v)) {
    render_table(out, key, v);
  } else if (v.is_object()) {
    for (const auto& [k, inner] : v.items()) render_value(out, key + "." + k, inner);
  } else {
    out << key << ": " << fmt6(v) << "\n";
  }
}

}  // namespace

std::string render_report(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("report is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema_version"))
    throw Error(ErrorCode::SchemaMismatch, "report has no schema_version field");
  if (j["schema_version"] != kReportSchemaVersion)
    throw Error(ErrorCode::SchemaMismatch, "unsupported report schema_version " + j["schema_version"].dump());
  std::ostringstream out;
  for (const auto& [k, v] : j.items()) render_value(out, k, v);
  return out.str();
}

}  // namespace langprofile
