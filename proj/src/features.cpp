#include "langprofile/features.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "langprofile/error.hpp"

namespace langprofile {

namespace {

// Tables I-V in order, with ipsyn_total (which appears among the reported
// loadings) placed after dss.
constexpr std::array<std::string_view, 57> kNames{
    // syntactic and error analysis
    "word_errors", "f_k", "n_v", "n_aux", "n_3s_v", "det_n_pl", "det_pl_n", "pro_aux", "pro_3s_v", "total_error",
    "total_syl", "average_syl", "mlu_words", "mlu_morphemes", "mlu100_utts", "verb_utt", "dss", "ipsyn_total",
    // morphological development markers
    "present_progressive", "propositions_in", "propositions_on", "plural_s", "irregular_past_tense", "possessive_s",
    "uncontractible_copula", "articles", "regular_past_ed", "regular_3rd_person_s", "irregular_3rd_person",
    "uncontractible_aux", "contractible_copula", "contractible_aux",
    // utterance structure and fluency
    "n_dos", "repetition", "retracing", "fillers",
    // language model perplexity
    "s_1g_ppl", "s_2g_ppl", "s_3g_ppl", "d_1g_ppl", "d_2g_ppl", "d_3g_ppl",
    // z-score comparisons
    "z_mlu_sli", "z_mlu_td", "z_word_errors_sli", "z_word_errors_td", "z_r_2_i_verbs_sli", "z_r_2_i_verbs_td",
    "z_utts_sli", "z_utts_td",
    // basic production and lexical diversity
    "child_TNW", "child_TNS", "examiner_TNW", "freq_ttr", "r_2_i_verbs", "mor_words", "num_pos_tags"};

constexpr std::array<std::string_view, 4> kZBase{"mlu_words", "word_errors", "r_2_i_verbs", "child_TNS"};

constexpr std::array<std::string_view, 14> kMarkerNames{
    "present_progressive", "propositions_in",     "propositions_on",      "plural_s",
    "irregular_past_tense", "possessive_s",       "uncontractible_copula", "articles",
    "regular_past_ed",     "regular_3rd_person_s", "irregular_3rd_person", "uncontractible_aux",
    "contractible_copula", "contractible_aux"};

constexpr std::array<std::string_view, 8> kPatternNames{"n_v",      "n_aux",   "n_3s_v",   "det_n_pl",
                                                        "det_pl_n", "pro_aux", "pro_3s_v", "n_dos"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

std::vector<const Utterance*> child_utterances(const Transcript& t) {
  std::vector<const Utterance*> out;
  for (const auto& u : t.utterances)
    if (u.speaker.is_child()) out.push_back(&u);
  return out;
}

std::vector<const Utterance*> require_child(const Transcript& t) {
  auto out = child_utterances(t);
  if (out.empty()) throw Error(ErrorCode::EmptyTranscript, "transcript '" + t.id + "' has no child utterances");
  return out;
}

// A %mor token together with the main-tier word it was aligned to.
struct AlignedMor {
  MorToken tok;
  std::string surface;
  bool clitic = false;

  bool contracted() const { return clitic && surface.find('\'') != std::string::npos; }
};

void flatten_into(const MorToken& m, const std::string& surface, bool clitic, std::vector<AlignedMor>& out) {
  AlignedMor a{m, surface, clitic};
  a.tok.clitics.clear();
  out.push_back(std::move(a));
  for (const auto& c : m.clitics) flatten_into(c, surface, true, out);
}

std::vector<AlignedMor> aligned_mor(const Utterance& u) {
  std::vector<AlignedMor> out;
  if (!u.mor_tokens) return out;
  for (std::size_t i = 0; i < u.mor_tokens->size(); ++i)
    flatten_into((*u.mor_tokens)[i], u.clean_tokens[i], false, out);
  return out;
}

bool any_child_mor(const Transcript& t) {
  return std::any_of(t.utterances.begin(), t.utterances.end(),
                     [](const Utterance& u) { return u.speaker.is_child() && u.mor_tokens.has_value(); });
}

bool is_copula(const MorToken& m) { return m.category() == "cop" || m.pos_tag == "v:cop"; }
bool is_be(const MorToken& m) { return lower(m.lemma) == "be"; }
bool is_plural_det(const MorToken& m) {
  if (m.category() != "det") return false;
  const auto l = lower(m.lemma);
  return m.has_marker("PL") || l == "these" || l == "those";
}

}  // namespace

std::string_view to_string(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::Production: return "production";
    case FeatureCategory::Lexical: return "lexical";
    case FeatureCategory::Morphological: return "morphological";
    case FeatureCategory::SyntacticError: return "syntactic_error";
    case FeatureCategory::Fluency: return "fluency";
    case FeatureCategory::Perplexity: return "perplexity";
    case FeatureCategory::ZScore: return "zscore";
  }
  return "";
}

std::span<const std::string_view> feature_names() { return kNames; }
std::size_t feature_count() { return kNames.size(); }

std::size_t feature_index(std::string_view name) {
  auto it = std::find(kNames.begin(), kNames.end(), name);
  if (it == kNames.end()) throw std::out_of_range("unknown feature '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - kNames.begin());
}

bool is_feature(std::string_view name) { return std::find(kNames.begin(), kNames.end(), name) != kNames.end(); }

FeatureCategory feature_category(std::string_view name) {
  const auto i = feature_index(name);
  if (i < 18) return FeatureCategory::SyntacticError;
  if (i < 32) return FeatureCategory::Morphological;
  if (i < 36) return FeatureCategory::Fluency;
  if (i < 42) return FeatureCategory::Perplexity;
  if (i < 50) return FeatureCategory::ZScore;
  if (i < 53) return FeatureCategory::Production;
  return FeatureCategory::Lexical;
}

ProductionCounts production_counts(const Transcript& t) {
  require_child(t);
  ProductionCounts p;
  for (const auto& u : t.utterances) {
    const auto words = static_cast<double>(u.clean_tokens.size());
    if (u.speaker.is_child()) {
      p.child_TNW += words;
      if (u.is_sentence()) p.child_TNS += 1;
    } else if (u.speaker.is_examiner()) {
      p.examiner_TNW += words;
    }
  }
  return p;
}

int count_syllables(std::string_view word) {
  std::string letters;
  for (unsigned char c : word)
    if (std::isalpha(c)) letters.push_back(static_cast<char>(std::tolower(c)));
  auto vowel = [](char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y'; };
  int groups = 0;
  bool prev = false;
  for (char c : letters) {
    const bool v = vowel(c);
    if (v && !prev) ++groups;
    prev = v;
  }
  const auto n = letters.size();
  if (groups > 1 && n >= 2 && letters[n - 1] == 'e' && !vowel(letters[n - 2])) --groups;
  return std::max(1, groups);
}

UtteranceMeasures utterance_measures(const Transcript& t, bool count_fusions) {
  const auto utts = require_child(t);
  UtteranceMeasures m;
  double words = 0, morphemes = 0, first100 = 0;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const auto& u = *utts[i];
    const auto w = static_cast<double>(u.clean_tokens.size());
    words += w;
    if (i < 100) first100 += w;
    if (u.mor_tokens) {
      bool has_verb = false;
      for (const auto& tok : flatten_mor(*u.mor_tokens)) {
        morphemes += tok.morpheme_count(count_fusions);
        if (starts_with(tok.pos_tag, "v") || starts_with(tok.pos_tag, "aux")) has_verb = true;
      }
      if (has_verb) m.verb_utt += 1;
    } else {
      morphemes += w;
      m.morphemes_estimated = true;
    }
    for (const auto& tok : u.clean_tokens) m.total_syl += count_syllables(tok);
  }
  const auto n = static_cast<double>(utts.size());
  m.mlu_words = words / n;
  m.mlu_morphemes = morphemes / n;
  m.mlu100_utts = first100 / static_cast<double>(std::min<std::size_t>(100, utts.size()));
  m.average_syl = words > 0 ? m.total_syl / words : 0.0;
  return m;
}

double flesch_kincaid(double words, double sentences, double syllables) {
  if (words <= 0) throw Error(ErrorCode::DivisionDomain, "Flesch-Kincaid needs at least one word");
  if (sentences <= 0) throw Error(ErrorCode::DivisionDomain, "Flesch-Kincaid needs at least one sentence");
  return 0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59;
}

double flesch_kincaid(const Transcript& t) {
  const auto p = production_counts(t);
  const auto m = utterance_measures(t);
  return flesch_kincaid(p.child_TNW, p.child_TNS, m.total_syl);
}

LexicalMeasures lexical_measures(const Transcript& t) {
  const auto utts = require_child(t);
  LexicalMeasures m;
  std::set<std::string> types, tags;
  double tokens = 0, raw_verbs = 0, inflected_verbs = 0;
  for (const auto* u : utts) {
    for (const auto& w : u->clean_tokens) types.insert(lower(w));
    tokens += static_cast<double>(u->clean_tokens.size());
    if (!u->mor_tokens) continue;
    for (const auto& tok : flatten_mor(*u->mor_tokens)) {
      m.mor_words += 1;
      tags.insert(tok.pos_tag);
      if (tok.category() == "v") (tok.inflected() ? inflected_verbs : raw_verbs) += 1;
    }
  }
  if (tokens == 0) throw Error(ErrorCode::EmptyTranscript, "transcript '" + t.id + "' has no child words");
  m.freq_ttr = static_cast<double>(types.size()) / tokens;
  m.r_2_i_verbs = raw_verbs / std::max(1.0, inflected_verbs);
  m.verb_ratio_degenerate = inflected_verbs == 0;
  m.num_pos_tags = static_cast<double>(tags.size());
  m.mor_missing = !any_child_mor(t);
  return m;
}

MorphemeMarkers morpheme_markers(const Transcript& t) {
  MorphemeMarkers m;
  m.mor_missing = !any_child_mor(t);
  for (const auto* u : child_utterances(t)) {
    for (const auto& a : aligned_mor(*u)) {
      const auto& tok = a.tok;
      const auto cat = tok.category();
      const auto lemma = lower(tok.lemma);
      if (tok.has_suffix("PROG") || tok.has_suffix("ING") || tok.has_suffix("PRESP")) m.present_progressive += 1;
      if (cat == "prep" && lemma == "in") m.propositions_in += 1;
      if (cat == "prep" && lemma == "on") m.propositions_on += 1;
      if (cat == "n" && tok.has_suffix("PL")) m.plural_s += 1;
      if (cat == "v" && tok.has_fusion("PAST")) m.irregular_past_tense += 1;
      if (tok.has_suffix("POSS") || cat == "poss") m.possessive_s += 1;
      if (tok.pos_tag == "det:art" || (cat == "det" && (lemma == "a" || lemma == "an" || lemma == "the")))
        m.articles += 1;
      if (cat == "v" && tok.has_suffix("PAST")) m.regular_past_ed += 1;
      if (cat == "v" && tok.has_suffix("3S")) m.regular_3rd_person_s += 1;
      if (cat == "v" && tok.has_fusion("3S")) m.irregular_3rd_person += 1;
      if (is_be(tok) && is_copula(tok)) (a.contracted() ? m.contractible_copula : m.uncontractible_copula) += 1;
      if (is_be(tok) && cat == "aux") (a.contracted() ? m.contractible_aux : m.uncontractible_aux) += 1;
    }
  }
  return m;
}

PosPatterns pos_patterns(const Transcript& t) {
  PosPatterns p;
  p.mor_missing = !any_child_mor(t);
  for (const auto* u : child_utterances(t)) {
    if (!u->mor_tokens) continue;
    const auto toks = flatten_mor(*u->mor_tokens);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      const auto& a = toks[i];
      if (a.category() == "aux" && lower(a.lemma) == "do") p.n_dos += 1;
      if (i + 1 >= toks.size()) continue;
      const auto& b = toks[i + 1];
      const auto ca = a.category(), cb = b.category();
      const bool b_3s_verb = cb == "v" && b.has_marker("3S");
      if (ca == "n" && cb == "v") p.n_v += 1;
      if (ca == "n" && cb == "aux") p.n_aux += 1;
      if (ca == "n" && b_3s_verb) p.n_3s_v += 1;
      if (ca == "det" && cb == "n" && b.has_marker("PL")) p.det_n_pl += 1;
      if (is_plural_det(a) && cb == "n" && !b.has_marker("PL")) p.det_pl_n += 1;
      if (ca == "pro" && cb == "aux") p.pro_aux += 1;
      if (ca == "pro" && b_3s_verb) p.pro_3s_v += 1;
    }
  }
  return p;
}

FluencyCounts fluency_and_errors(const Transcript& t, const std::set<std::string>& error_postcodes) {
  FluencyCounts f;
  AnnotationEvents ev;
  double utterance_errors = 0;
  for (const auto* u : child_utterances(t)) {
    ev += u->events;
    for (const auto& pc : u->postcodes)
      if (error_postcodes.count(pc)) utterance_errors += 1;
  }
  f.fillers = ev.fillers;
  f.repetition = ev.repetitions;
  f.retracing = ev.retracings;
  f.word_errors = ev.word_errors;
  f.total_error = ev.word_errors + utterance_errors;
  return f;
}

const GroupStats::Moments& GroupStats::get(std::string_view feature, Group g) const {
  if (g == Group::Unknown) throw std::invalid_argument("group statistics exist only for SLI and TD");
  auto it = by_feature.find(feature);
  if (it == by_feature.end()) throw std::out_of_range("no group statistics for '" + std::string(feature) + "'");
  return it->second[g == Group::SLI ? 0 : 1];
}

std::span<const std::string_view> zscore_base_features() { return kZBase; }

GroupStats compute_group_stats(std::span<const FeatureVector> vectors, std::span<const Group> groups) {
  if (vectors.size() != groups.size()) throw Error(ErrorCode::LengthMismatch, "one group label per vector needed");
  GroupStats gs;
  for (auto name : kZBase) {
    auto& entry = gs.by_feature[std::string(name)];
    for (int gi = 0; gi < 2; ++gi) {
      const Group want = gi == 0 ? Group::SLI : Group::TD;
      double sum = 0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < vectors.size(); ++i)
        if (groups[i] == want) sum += vectors[i][name], ++n;
      auto& mo = entry[static_cast<std::size_t>(gi)];
      mo.n = n;
      mo.mean = n ? sum / static_cast<double>(n) : 0.0;
      double ss = 0;
      for (std::size_t i = 0; i < vectors.size(); ++i)
        if (groups[i] == want) ss += (vectors[i][name] - mo.mean) * (vectors[i][name] - mo.mean);
      mo.sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    }
  }
  return gs;
}

ZFeatures zscore_features(const FeatureVector& v, const GroupStats& g) {
  auto z = [&](std::string_view base, Group grp) {
    const auto& m = g.get(base, grp);
    if (m.n < 2 || !(m.sd > 0))
      throw Error(ErrorCode::ZeroSd, std::string(base) + " has zero spread in group " + std::string(to_string(grp)));
    return (v[base] - m.mean) / m.sd;
  };
  ZFeatures out;
  out.z_mlu_sli = z("mlu_words", Group::SLI);
  out.z_mlu_td = z("mlu_words", Group::TD);
  out.z_word_errors_sli = z("word_errors", Group::SLI);
  out.z_word_errors_td = z("word_errors", Group::TD);
  out.z_r_2_i_verbs_sli = z("r_2_i_verbs", Group::SLI);
  out.z_r_2_i_verbs_td = z("r_2_i_verbs", Group::TD);
  out.z_utts_sli = z("child_TNS", Group::SLI);
  out.z_utts_td = z("child_TNS", Group::TD);
  return out;
}

void apply_zscores(FeatureVector& v, const GroupStats& g) {
  const auto z = zscore_features(v, g);
  v.set("z_mlu_sli", z.z_mlu_sli);
  v.set("z_mlu_td", z.z_mlu_td);
  v.set("z_word_errors_sli", z.z_word_errors_sli);
  v.set("z_word_errors_td", z.z_word_errors_td);
  v.set("z_r_2_i_verbs_sli", z.z_r_2_i_verbs_sli);
  v.set("z_r_2_i_verbs_td", z.z_r_2_i_verbs_td);
  v.set("z_utts_sli", z.z_utts_sli);
  v.set("z_utts_td", z.z_utts_td);
}

FeatureVector extract_base(const Transcript& t, const PerplexityModels& lms, const ExtractOptions& opts) {
  FeatureVector v;

  const auto p = production_counts(t);
  v.set("child_TNW", p.child_TNW);
  v.set("child_TNS", p.child_TNS);
  v.set("examiner_TNW", p.examiner_TNW);

  const auto um = utterance_measures(t, opts.count_fusions);
  v.set("mlu_words", um.mlu_words);
  v.set("mlu_morphemes", um.mlu_morphemes);
  v.set("mlu100_utts", um.mlu100_utts);
  v.set("verb_utt", um.verb_utt);
  v.set("total_syl", um.total_syl);
  v.set("average_syl", um.average_syl);
  if (um.morphemes_estimated) v.flag("mlu_morphemes");

  v.set("f_k", flesch_kincaid(p.child_TNW, p.child_TNS, um.total_syl));

  const auto lx = lexical_measures(t);
  v.set("freq_ttr", lx.freq_ttr);
  v.set("r_2_i_verbs", lx.r_2_i_verbs);
  v.set("mor_words", lx.mor_words);
  v.set("num_pos_tags", lx.num_pos_tags);
  if (lx.verb_ratio_degenerate) v.flag("r_2_i_verbs");
  if (lx.mor_missing) {
    for (auto n : {"r_2_i_verbs", "mor_words", "num_pos_tags", "verb_utt"}) v.flag(n);
  }

  const auto mk = morpheme_markers(t);
  const std::array<double, 14> marker_values{
      mk.present_progressive, mk.propositions_in,      mk.propositions_on,       mk.plural_s,
      mk.irregular_past_tense, mk.possessive_s,        mk.uncontractible_copula, mk.articles,
      mk.regular_past_ed,     mk.regular_3rd_person_s, mk.irregular_3rd_person,  mk.uncontractible_aux,
      mk.contractible_copula, mk.contractible_aux};
  for (std::size_t i = 0; i < kMarkerNames.size(); ++i) {
    v.set(kMarkerNames[i], marker_values[i]);
    if (mk.mor_missing) v.flag(kMarkerNames[i]);
  }

  const auto pp = pos_patterns(t);
  const std::array<double, 8> pattern_values{pp.n_v,      pp.n_aux,   pp.n_3s_v,   pp.det_n_pl,
                                             pp.det_pl_n, pp.pro_aux, pp.pro_3s_v, pp.n_dos};
  for (std::size_t i = 0; i < kPatternNames.size(); ++i) {
    v.set(kPatternNames[i], pattern_values[i]);
    if (pp.mor_missing) v.flag(kPatternNames[i]);
  }

  const auto fl = fluency_and_errors(t, opts.error_postcodes);
  v.set("fillers", fl.fillers);
  v.set("repetition", fl.repetition);
  v.set("retracing", fl.retracing);
  v.set("word_errors", fl.word_errors);
  v.set("total_error", fl.total_error);

  // Transcripts without usable %mor still get a row; the scores are flagged.
  auto scored = [&](std::string_view name, auto&& fn) {
    try {
      v.set(name, fn());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoScorableUtterances) throw;
      v.set(name, 0.0);
      v.flag(name);
    }
  };
  scored("dss", [&] { return dss_score(t, opts.dss_table); });
  scored("ipsyn_total", [&] { return ipsyn_total(t, opts.ipsyn_table); });

  const auto ppl = perplexity_features(t, lms);
  v.set("s_1g_ppl", ppl.s_1g_ppl);
  v.set("s_2g_ppl", ppl.s_2g_ppl);
  v.set("s_3g_ppl", ppl.s_3g_ppl);
  v.set("d_1g_ppl", ppl.d_1g_ppl);
  v.set("d_2g_ppl", ppl.d_2g_ppl);
  v.set("d_3g_ppl", ppl.d_3g_ppl);
  return v;
}

FeatureVector extract_all(const Transcript& t, const GroupStats& g, const PerplexityModels& lms,
                          const ExtractOptions& opts) {
  auto v = extract_base(t, lms, opts);
  apply_zscores(v, g);
  return v;
}

}  // namespace langprofile
