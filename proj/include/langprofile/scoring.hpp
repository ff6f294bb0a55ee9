#pragma once

// Rule tables for the syntactic scores (DSS and IPSyn). The shipped defaults
// are simplified approximations of the published instruments; both tables
// can be replaced from a text file.
//
// Table text format, one entry per line, `#` starts a comment:
//
//   @sentence_point <points>     DSS: bonus for an error-free sentence
//   @cap <n>                     IPSyn: maximum credits per structure
//   @require <token-condition>   an utterance is scorable only if some token matches
//   <name> <points> <pattern>
//
// A pattern is a whitespace-separated sequence of token conditions that must
// match adjacent %mor tokens; a leading `^` anchors it at utterance start.
// A token condition is `key=v1|v2;key=v3` (all keys must match, any value):
//   cat (pos before ':'), tag (full pos), lemma, suffix, fusion,
//   marker (suffix or fusion), inflected (0 or 1).

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "langprofile/chat.hpp"

namespace langprofile {

struct TokenCondition {
  struct Term {
    std::string key;
    std::vector<std::string> values;
  };
  std::vector<Term> terms;

  bool matches(const MorToken& tok) const;
  static TokenCondition parse(std::string_view text);
};

struct ScoringRule {
  std::string name;
  double points = 0;
  bool anchored = false;
  std::vector<TokenCondition> pattern;

  /// Start positions in `tokens` where the pattern matches.
  std::vector<std::size_t> matches(std::span<const MorToken> tokens) const;
};

struct ScoringTable {
  std::vector<ScoringRule> rules;
  std::vector<TokenCondition> required;
  double sentence_point = 0;
  int cap = 0;  // 0 = uncapped

  bool scorable(std::span<const MorToken> tokens) const;

  static ScoringTable parse(std::string_view text);
  static ScoringTable default_dss();
  static ScoringTable default_ipsyn();
  static std::string_view default_dss_text();
  static std::string_view default_ipsyn_text();
};

/// Child %mor tokens of one utterance with clitics flattened after their host.
std::vector<MorToken> flatten_mor(const std::vector<MorToken>& mor);

/// DSS points of a single utterance: per rule name and start position the
/// best-scoring matching rule counts once, plus the sentence point when the
/// utterance is a complete sentence without `[*]` errors.
double dss_utterance_score(const Utterance& u, const ScoringTable& table);

/// Mean utterance score over scorable child utterances.
double dss_score(const Transcript& t, const ScoringTable& table);

/// Sum over structures of points x min(cap, number of child utterances
/// containing the structure).
double ipsyn_total(const Transcript& t, const ScoringTable& table);

}  // namespace langprofile
