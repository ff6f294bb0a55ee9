// Command-line front end: extract, train-lm, analyze, report.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "langprofile/error.hpp"
#include "langprofile/ngram.hpp"
#include "langprofile/pipeline.hpp"

namespace fs = std::filesystem;
using namespace langprofile;

namespace {

constexpr int kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << text;
}

int exit_code(ErrorCode code) {
  switch (classify(code)) {
    case ErrorClass::Usage: return kExitUsage;
    case ErrorClass::Data: return kExitData;
    case ErrorClass::Numeric: return kExitNumeric;
  }
  return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Child language profiling: feature extraction, PCA and clustering reports"};
  app.require_subcommand(1);

  fs::path ex_input, ex_output, ex_dss, ex_ipsyn;
  double ex_k = 1.0;
  int ex_unk = 1;
  bool ex_loo = false, ex_fusions = false;
  std::vector<std::string> ex_postcodes{"gram"};
  auto* extract = app.add_subcommand("extract", "Write the feature CSV for a directory of CHAT transcripts");
  extract->add_option("-i,--input", ex_input, "Directory of .cha files")->required()->check(CLI::ExistingDirectory);
  extract->add_option("-o,--output", ex_output, "Feature CSV to write")->required();
  extract->add_option("--lm-k", ex_k, "Add-k smoothing constant")->capture_default_str();
  extract->add_option("--unk-threshold", ex_unk, "Types seen fewer times become <unk>")->capture_default_str();
  extract->add_flag("--loo", ex_loo, "Score each transcript with models trained without it");
  extract->add_flag("--count-fusions", ex_fusions, "Count &FUS markers as morphemes");
  extract->add_option("--dss-table", ex_dss, "DSS rule table")->check(CLI::ExistingFile);
  extract->add_option("--ipsyn-table", ex_ipsyn, "IPSyn rule table")->check(CLI::ExistingFile);
  extract->add_option("--error-postcodes", ex_postcodes, "Postcodes that mark an utterance-level error")
      ->delimiter(',')
      ->capture_default_str();

  fs::path lm_input, lm_output;
  double lm_k = 1.0;
  int lm_unk = 1;
  auto* train = app.add_subcommand("train-lm", "Train and save the six group n-gram models");
  train->add_option("-i,--input", lm_input, "Directory of .cha files")->required()->check(CLI::ExistingDirectory);
  train->add_option("-o,--output", lm_output, "Directory for the model files")->required();
  train->add_option("--lm-k", lm_k, "Add-k smoothing constant")->capture_default_str();
  train->add_option("--unk-threshold", lm_unk, "Types seen fewer times become <unk>")->capture_default_str();

  fs::path config_path, out_override;
  auto* analyze = app.add_subcommand("analyze", "Run the full pipeline and write the report bundle");
  analyze->add_option("-c,--config", config_path, "Pipeline config file")->required()->check(CLI::ExistingFile);
  analyze->add_option("-o,--output", out_override, "Override the output directory");

  std::vector<fs::path> report_files;
  auto* report = app.add_subcommand("report", "Render JSON reports as text tables");
  report->add_option("files", report_files, "Report JSON files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*extract) {
      ExtractOptions opts;
      opts.count_fusions = ex_fusions;
      opts.error_postcodes = {ex_postcodes.begin(), ex_postcodes.end()};
      if (!ex_dss.empty()) opts.dss_table = ScoringTable::parse(slurp(ex_dss));
      if (!ex_ipsyn.empty()) opts.ipsyn_table = ScoringTable::parse(slurp(ex_ipsyn));
      const auto corpus = load_transcripts(ex_input);
      const auto table = extract_features(corpus, opts, LmOptions{ex_k, ex_unk, ex_loo});
      for (const auto& w : table.warnings) std::cerr << "warning: " << w << "\n";
      spit(ex_output, write_feature_csv(table));
      std::cerr << "wrote " << table.rows() << " rows to " << ex_output.string() << "\n";
    } else if (*train) {
      const auto corpus = load_transcripts(lm_input);
      const auto models = train_group_models(corpus, lm_k, lm_unk);
      fs::create_directories(lm_output);
      for (std::size_t o = 0; o < 3; ++o) {
        spit(lm_output / ("sli_" + std::to_string(o + 1) + "g.lm"), models.sli[o].save());
        spit(lm_output / ("td_" + std::to_string(o + 1) + "g.lm"), models.td[o].save());
      }
      std::cerr << "wrote 6 models to " << lm_output.string() << "\n";
    } else if (*analyze) {
      auto config = load_config(config_path);
      if (!out_override.empty()) config.output_dir = out_override;
      const auto bundle = run_pipeline(config);
      std::cerr << "wrote " << bundle.size() << " files to " << config.output_dir.string() << " (config "
                << config.hash() << ", seed " << *config.seed << ")\n";
    } else if (*report) {
      for (const auto& f : report_files) {
        if (report_files.size() > 1) std::cout << "== " << f.filename().string() << " ==\n";
        std::cout << render_report(slurp(f));
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
