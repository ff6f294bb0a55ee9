#include "langprofile/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "langprofile/error.hpp"
#include "langprofile/numfmt.hpp"

namespace langprofile {

namespace detail {
extern const std::string_view kDefaultDssTable;
extern const std::string_view kDefaultIpsynTable;
}  // namespace detail

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool contains(const std::vector<std::string>& values, std::string_view v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

bool any_of_markers(const std::vector<std::string>& have, const std::vector<std::string>& wanted) {
  return std::any_of(have.begin(), have.end(), [&](const std::string& h) { return contains(wanted, h); });
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      if (i > start) out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

[[noreturn]] void bad_table(const std::string& msg) { throw Error(ErrorCode::BadConfig, "scoring table: " + msg); }

}  // namespace

bool TokenCondition::matches(const MorToken& tok) const {
  for (const auto& term : terms) {
    const auto& k = term.key;
    const auto& v = term.values;
    bool ok = false;
    if (k == "cat") ok = contains(v, tok.category());
    else if (k == "tag") ok = contains(v, tok.pos_tag);
    else if (k == "lemma") ok = contains(v, lower(tok.lemma));
    else if (k == "suffix") ok = any_of_markers(tok.suffixes, v);
    else if (k == "fusion") ok = any_of_markers(tok.fusions, v);
    else if (k == "marker") ok = any_of_markers(tok.suffixes, v) || any_of_markers(tok.fusions, v);
    else if (k == "inflected") ok = contains(v, tok.inflected() ? "1" : "0");
    if (!ok) return false;
  }
  return true;
}

TokenCondition TokenCondition::parse(std::string_view text) {
  TokenCondition c;
  for (const auto& term : split(text, ';')) {
    const auto eq = term.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == term.size()) bad_table("bad condition term '" + term + "'");
    Term t{term.substr(0, eq), split(std::string_view(term).substr(eq + 1), '|')};
    static const std::vector<std::string> keys{"cat", "tag", "lemma", "suffix", "fusion", "marker", "inflected"};
    if (!contains(keys, t.key)) bad_table("unknown condition key '" + t.key + "'");
    if (t.key == "lemma")
      for (auto& v : t.values) v = lower(v);
    c.terms.push_back(std::move(t));
  }
  if (c.terms.empty()) bad_table("empty token condition");
  return c;
}

std::vector<std::size_t> ScoringRule::matches(std::span<const MorToken> tokens) const {
  std::vector<std::size_t> out;
  if (pattern.empty() || tokens.size() < pattern.size()) return out;
  const std::size_t last_start = anchored ? 0 : tokens.size() - pattern.size();
  for (std::size_t s = 0; s <= last_start; ++s) {
    bool ok = true;
    for (std::size_t j = 0; j < pattern.size() && ok; ++j) ok = pattern[j].matches(tokens[s + j]);
    if (ok) out.push_back(s);
  }
  return out;
}

bool ScoringTable::scorable(std::span<const MorToken> tokens) const {
  return std::all_of(required.begin(), required.end(), [&](const TokenCondition& c) {
    return std::any_of(tokens.begin(), tokens.end(), [&](const MorToken& t) { return c.matches(t); });
  });
}

ScoringTable ScoringTable::parse(std::string_view text) {
  ScoringTable table;
  std::istringstream in{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> fields;
    for (std::string f; ls >> f;) fields.push_back(f);
    if (fields.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";

    if (fields[0] == "@sentence_point" || fields[0] == "@cap") {
      const auto v = fields.size() == 2 ? parse_double(fields[1]) : std::nullopt;
      if (!v || *v < 0) bad_table(where + fields[0] + " needs one non-negative number");
      if (fields[0] == "@cap") table.cap = static_cast<int>(*v);
      else table.sentence_point = *v;
      continue;
    }
    if (fields[0] == "@require") {
      if (fields.size() != 2) bad_table(where + "@require needs one token condition");
      table.required.push_back(TokenCondition::parse(fields[1]));
      continue;
    }
    if (fields[0].front() == '@') bad_table(where + "unknown directive " + fields[0]);
    if (fields.size() < 3) bad_table(where + "rule needs a name, points and a pattern");

    ScoringRule rule;
    rule.name = fields[0];
    const auto pts = parse_double(fields[1]);
    if (!pts) bad_table(where + "bad points '" + fields[1] + "'");
    rule.points = *pts;
    std::size_t i = 2;
    if (fields[i] == "^") {
      rule.anchored = true;
      ++i;
    }
    for (; i < fields.size(); ++i) rule.pattern.push_back(TokenCondition::parse(fields[i]));
    if (rule.pattern.empty()) bad_table(where + "empty pattern");
    table.rules.push_back(std::move(rule));
  }
  return table;
}

std::string_view ScoringTable::default_dss_text() { return detail::kDefaultDssTable; }
std::string_view ScoringTable::default_ipsyn_text() { return detail::kDefaultIpsynTable; }
ScoringTable ScoringTable::default_dss() { return parse(default_dss_text()); }
ScoringTable ScoringTable::default_ipsyn() { return parse(default_ipsyn_text()); }

std::vector<MorToken> flatten_mor(const std::vector<MorToken>& mor) {
  std::vector<MorToken> out;
  out.reserve(mor.size());
  for (const auto& m : mor) {
    MorToken host = m;
    host.clitics.clear();
    out.push_back(std::move(host));
    for (const auto& c : flatten_mor(m.clitics)) out.push_back(c);
  }
  return out;
}

double dss_utterance_score(const Utterance& u, const ScoringTable& table) {
  if (!u.mor_tokens) return 0.0;
  const auto tokens = flatten_mor(*u.mor_tokens);
  std::map<std::pair<std::string, std::size_t>, double> best;
  for (const auto& rule : table.rules) {
    for (auto pos : rule.matches(tokens)) {
      auto [it, inserted] = best.try_emplace({rule.name, pos}, rule.points);
      if (!inserted) it->second = std::max(it->second, rule.points);
    }
  }
  double score = 0.0;
  for (const auto& [key, pts] : best) score += pts;
  if (u.is_sentence() && u.events.word_errors == 0) score += table.sentence_point;
  return score;
}

double dss_score(const Transcript& t, const ScoringTable& table) {
  double sum = 0.0;
  int n = 0;
  for (const auto& u : t.utterances) {
    if (!u.speaker.is_child() || !u.mor_tokens) continue;
    if (!table.scorable(flatten_mor(*u.mor_tokens))) continue;
    sum += dss_utterance_score(u, table);
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::NoScorableUtterances, "no child utterance qualifies for DSS");
  return sum / n;
}

double ipsyn_total(const Transcript& t, const ScoringTable& table) {
  std::vector<int> credited(table.rules.size(), 0);
  int scorable = 0;
  for (const auto& u : t.utterances) {
    if (!u.speaker.is_child() || !u.mor_tokens) continue;
    const auto tokens = flatten_mor(*u.mor_tokens);
    if (!table.scorable(tokens)) continue;
    ++scorable;
    for (std::size_t r = 0; r < table.rules.size(); ++r)
      if (!table.rules[r].matches(tokens).empty()) ++credited[r];
  }
  if (scorable == 0) throw Error(ErrorCode::NoScorableUtterances, "no child utterance with a %mor tier");
  double total = 0.0;
  for (std::size_t r = 0; r < table.rules.size(); ++r) {
    const int c = table.cap > 0 ? std::min(credited[r], table.cap) : credited[r];
    total += c * table.rules[r].points;
  }
  return total;
}

}  // namespace langprofile
