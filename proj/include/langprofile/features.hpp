#pragma once

// Per-child linguistic feature vector: production, lexical, morphological,
// syntactic/error, fluency, perplexity and group z-score features.

#include <array>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "langprofile/chat.hpp"
#include "langprofile/ngram.hpp"
#include "langprofile/scoring.hpp"

namespace langprofile {

enum class FeatureCategory { Production, Lexical, Morphological, SyntacticError, Fluency, Perplexity, ZScore };

std::string_view to_string(FeatureCategory c);

/// Fixed feature order; this is also the feature CSV column order.
std::span<const std::string_view> feature_names();
std::size_t feature_count();
/// Column index of `name`; throws std::out_of_range for unknown names.
std::size_t feature_index(std::string_view name);
bool is_feature(std::string_view name);
FeatureCategory feature_category(std::string_view name);

struct FeatureVector {
  std::vector<double> values = std::vector<double>(feature_count(), 0.0);
  std::set<std::string> flags;  // names of features computed in degraded mode

  double operator[](std::string_view name) const { return values[feature_index(name)]; }
  void set(std::string_view name, double v) { values[feature_index(name)] = v; }
  void flag(std::string_view name) { flags.emplace(name); }
  bool flagged(std::string_view name) const { return flags.count(std::string(name)) > 0; }
};

struct ExtractOptions {
  bool count_fusions = false;                        // `&FUS` adds a morpheme
  std::set<std::string> error_postcodes{"gram"};     // utterance-level error codes
  ScoringTable dss_table = ScoringTable::default_dss();
  ScoringTable ipsyn_table = ScoringTable::default_ipsyn();
};

struct ProductionCounts {
  double child_TNW = 0, child_TNS = 0, examiner_TNW = 0;
};
ProductionCounts production_counts(const Transcript& t);

struct UtteranceMeasures {
  double mlu_words = 0, mlu_morphemes = 0, mlu100_utts = 0, verb_utt = 0, total_syl = 0, average_syl = 0;
  bool morphemes_estimated = false;  // some utterance lacked %mor, word count used instead
};
UtteranceMeasures utterance_measures(const Transcript& t, bool count_fusions = false);

/// Vowel-group heuristic: runs of a/e/i/o/u/y, a silent final `e` dropped,
/// at least one per word.
int count_syllables(std::string_view word);

/// Grade-level formula 0.39 (words/sentences) + 11.8 (syllables/words) - 15.59.
double flesch_kincaid(double words, double sentences, double syllables);
double flesch_kincaid(const Transcript& t);

struct LexicalMeasures {
  double freq_ttr = 0, r_2_i_verbs = 0, mor_words = 0, num_pos_tags = 0;
  bool verb_ratio_degenerate = false;  // no inflected verbs, denominator clamped to 1
  bool mor_missing = false;
};
LexicalMeasures lexical_measures(const Transcript& t);

struct MorphemeMarkers {
  double present_progressive = 0, propositions_in = 0, propositions_on = 0, plural_s = 0,
         irregular_past_tense = 0, possessive_s = 0, uncontractible_copula = 0, articles = 0,
         regular_past_ed = 0, regular_3rd_person_s = 0, irregular_3rd_person = 0, uncontractible_aux = 0,
         contractible_copula = 0, contractible_aux = 0;
  bool mor_missing = false;
};
MorphemeMarkers morpheme_markers(const Transcript& t);

struct PosPatterns {
  double n_v = 0, n_aux = 0, n_3s_v = 0, det_n_pl = 0, det_pl_n = 0, pro_aux = 0, pro_3s_v = 0, n_dos = 0;
  bool mor_missing = false;
};
PosPatterns pos_patterns(const Transcript& t);

struct FluencyCounts {
  double fillers = 0, repetition = 0, retracing = 0, word_errors = 0, total_error = 0;
};
FluencyCounts fluency_and_errors(const Transcript& t, const std::set<std::string>& error_postcodes = {"gram"});

/// Per-group mean / sample sd of the features that have z-score companions.
struct GroupStats {
  struct Moments {
    double mean = 0, sd = 0;
    std::size_t n = 0;
  };
  // base feature name -> {SLI, TD}
  std::map<std::string, std::array<Moments, 2>, std::less<>> by_feature;

  const Moments& get(std::string_view feature, Group g) const;
};

/// Base feature for each z pair: mlu_words, word_errors, r_2_i_verbs and
/// child_TNS (the utterance count).
std::span<const std::string_view> zscore_base_features();

GroupStats compute_group_stats(std::span<const FeatureVector> vectors, std::span<const Group> groups);

struct ZFeatures {
  double z_mlu_sli = 0, z_mlu_td = 0, z_word_errors_sli = 0, z_word_errors_td = 0, z_r_2_i_verbs_sli = 0,
         z_r_2_i_verbs_td = 0, z_utts_sli = 0, z_utts_td = 0;
};
ZFeatures zscore_features(const FeatureVector& v, const GroupStats& g);

/// Every feature except the z-scores, which need population statistics.
FeatureVector extract_base(const Transcript& t, const PerplexityModels& lms, const ExtractOptions& opts = {});

/// Fills the eight z-score features of `v` in place.
void apply_zscores(FeatureVector& v, const GroupStats& g);

FeatureVector extract_all(const Transcript& t, const GroupStats& g, const PerplexityModels& lms,
                          const ExtractOptions& opts = {});

}  // namespace langprofile
