#pragma once

// End-to-end analysis: transcripts or a feature CSV in, a bundle of CSV and
// JSON reports out. Outputs depend only on the input bytes and the config.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "langprofile/chat.hpp"
#include "langprofile/features.hpp"
#include "langprofile/matrix.hpp"

namespace langprofile {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kSeedEnvVar = "LANGPROFILE_SEED";

/// Config file: `[section]` headers, `key = value` lines, `#` or `;` comments.
///
///   [input]      mode = transcripts | features, path
///   [features]   count_fusions, dss_table, ipsyn_table, error_postcodes (comma list)
///   [lm]         k, unk_threshold, loo
///   [prune]      threshold
///   [pca]        top_k, report_components
///   [clustering] k_min, k_max, seed, n_init, percentile, pc_dims,
///                dbscan_eps (number or "auto"), dbscan_min_pts, compare_features (comma list)
///   [output]     dir
///
/// Relative paths are resolved against the directory holding the config file.
struct PipelineConfig {
  enum class InputMode { Transcripts, Features };

  InputMode mode = InputMode::Features;
  std::filesystem::path input_path;

  bool count_fusions = false;
  std::optional<std::filesystem::path> dss_table, ipsyn_table;
  std::set<std::string> error_postcodes{"gram"};

  double lm_k = 1.0;
  int lm_unk_threshold = 1;
  bool lm_loo = false;

  double prune_threshold = 0.95;

  std::size_t pca_top_k = 5;
  std::size_t pca_report_components = 5;

  std::size_t k_min = 2, k_max = 10;
  std::optional<std::uint64_t> seed;
  std::size_t n_init = 32;
  double percentile = 5.0;
  std::size_t pc_dims = 3;
  std::optional<double> dbscan_eps;  // unset: 95th percentile of min_pts-nearest-neighbour distances
  std::size_t dbscan_min_pts = 5;
  std::vector<std::string> compare_features{"child_TNW", "mlu_morphemes", "word_errors"};

  std::filesystem::path output_dir;

  /// Sorted `section.key=value` lines for every setting that affects report
  /// contents (the output directory is excluded).
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 lowercase hex digits.
  std::string hash() const;
  ExtractOptions extract_options() const;
};

/// Throws BadConfig on unknown sections or keys, bad values or a missing seed.
/// `LANGPROFILE_SEED`, when set, replaces the seed.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

struct FeatureTable {
  std::vector<std::string> ids, corpora, sexes;
  std::vector<Group> groups;
  std::vector<double> age_months;  // NaN when unknown
  Matrix values;                   // rows x feature_count(), NaN for missing cells
  std::size_t missing_cells = 0;
  std::vector<std::string> warnings;

  std::size_t rows() const { return ids.size(); }
  /// 1 = SLI, 0 = TD, -1 = unknown.
  std::vector<int> outcomes() const;
};

inline constexpr std::size_t kMetadataColumns = 5;  // id, corpus, group, age_months, sex

/// Header: id,corpus,group,age_months,sex followed by the schema names.
std::string write_feature_csv(const FeatureTable& table);
/// Throws SchemaMismatch (header or row width) or NonNumericCell (1-based data row, column name).
FeatureTable parse_feature_csv(std::string_view text);
FeatureTable ingest_feature_csv(const std::filesystem::path& path);

struct LmOptions {
  double k = 1.0;
  int unk_threshold = 1;
  bool loo = false;  // score each transcript with its own group's models trained without it
};

/// Every *.cha file under `dir`, parsed, in path order. Throws EmptyCorpus if none.
std::vector<Transcript> load_transcripts(const std::filesystem::path& dir);

/// Full extraction: group language models, base features, then z-scores
/// against the corpus's own group statistics.
FeatureTable extract_features(const std::vector<Transcript>& corpus, const ExtractOptions& opts, const LmOptions& lm);

/// Report file name -> contents.
using ReportBundle = std::map<std::string, std::string>;

/// Runs every stage in memory. Stage failures are rethrown with the stage name
/// prefixed and the original error code.
ReportBundle build_reports(const PipelineConfig& config);
ReportBundle build_reports(const PipelineConfig& config, const FeatureTable& table);

/// Writes every file; on failure, removes whatever was written.
void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir);

ReportBundle run_pipeline(const PipelineConfig& config);

/// Human-readable rendering of a JSON report, numbers at 6 significant digits.
std::string render_report(std::string_view json_text);

}  // namespace langprofile
