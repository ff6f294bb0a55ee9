#include "langprofile/chat.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "langprofile/error.hpp"

namespace langprofile {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::optional<Terminator> terminator_of(std::string_view tok) {
  if (tok == ".") return Terminator::Period;
  if (tok == "?") return Terminator::Question;
  if (tok == "!") return Terminator::Exclaim;
  if (tok == "+!?") return Terminator::Question;
  // +... +..? +/. +//. +/? +//? and friends mark trailing off or interruption
  if (tok.size() >= 2 && tok.front() == '+') {
    const char last = tok.back();
    if (last == '.' || last == '?' || last == '!') return Terminator::TrailOff;
  }
  return std::nullopt;
}

bool is_postcode(std::string_view tok) { return tok.size() >= 3 && tok.substr(0, 2) == "[+"; }

bool is_bracket(std::string_view tok) { return !tok.empty() && tok.front() == '['; }

std::string_view bracket_body(std::string_view tok) {
  tok.remove_prefix(1);
  if (!tok.empty() && tok.back() == ']') tok.remove_suffix(1);
  return tok;
}

// Word-internal markup: `runn(ing)` -> "running", `doggie@c` -> "doggie".
std::string normalize_word(std::string_view w) {
  if (auto at = w.find('@'); at != std::string_view::npos && at > 0) w = w.substr(0, at);
  std::string out;
  out.reserve(w.size());
  for (char c : w)
    if (c != '(' && c != ')') out.push_back(c);
  return out;
}

bool is_dropped_material(std::string_view tok) {
  if (tok == "," || tok == "\xe2\x80\x9e" || tok == "\xe2\x80\xa1") return true;  // , „ ‡
  if (tok == "xxx" || tok == "yyy" || tok == "www") return true;
  if (tok.size() >= 3 && tok.front() == '(' && tok.back() == ')' &&
      tok.find_first_not_of(".") == 1 && tok.find_first_not_of(".", 1) == tok.size() - 1)
    return true;  // (.) (..) (...)
  if (tok.size() > 1 && tok.front() == '0') return true;  // omitted word
  return false;
}

int parse_int(std::string_view s, bool& ok) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  ok = ec == std::errc() && p == s.data() + s.size();
  return v;
}

// CHAT age field "Y;MM.DD", "Y;MM.", "Y;" or "Y".
std::optional<int> parse_age_months(std::string_view field) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  const auto semi = field.find(';');
  bool ok = false;
  const int years = parse_int(field.substr(0, semi), ok);
  if (!ok || years < 0) throw Error(ErrorCode::BadHeader, "unparseable age '" + std::string(field) + "'");
  int months = 0;
  if (semi != std::string_view::npos) {
    auto rest = field.substr(semi + 1);
    rest = rest.substr(0, rest.find('.'));
    if (!rest.empty()) {
      months = parse_int(rest, ok);
      if (!ok || months < 0 || months > 11)
        throw Error(ErrorCode::BadHeader, "unparseable age '" + std::string(field) + "'");
    }
  }
  const int total = years * 12 + months;
  if (total <= 0) throw Error(ErrorCode::BadHeader, "age must be positive: '" + std::string(field) + "'");
  return total;
}

Group parse_group(std::string_view field) {
  const std::string g = lower(trim(field));
  if (g.empty()) return Group::Unknown;
  if (g == "sli" || g == "li" || g == "dld" || g == "impaired") return Group::SLI;
  if (g == "td" || g == "typ" || g == "typical" || g == "normal" || g == "control" || g == "tl")
    return Group::TD;
  throw Error(ErrorCode::BadHeader, "unrecognized diagnosis '" + std::string(field) + "'");
}

std::optional<Sex> parse_sex(std::string_view field) {
  const std::string s = lower(trim(field));
  if (s == "male" || s == "m") return Sex::M;
  if (s == "female" || s == "f") return Sex::F;
  return std::nullopt;
}

Speaker::Role role_from_name(std::string_view role) {
  const std::string r = lower(role);
  if (r == "target_child") return Speaker::Role::Child;
  if (r == "investigator" || r == "examiner" || r == "clinician") return Speaker::Role::Examiner;
  return Speaker::Role::Other;
}

Speaker::Role default_role(std::string_view code) {
  if (code == "CHI") return Speaker::Role::Child;
  if (code == "EXA" || code == "INV") return Speaker::Role::Examiner;
  return Speaker::Role::Other;
}

bool valid_speaker_code(std::string_view code) {
  return code.size() == 3 && std::all_of(code.begin(), code.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

// Tags on a %mor tier that stand for punctuation rather than words.
bool is_mor_punctuation(std::string_view tok) {
  return tok == "cm|cm" || tok == "beg|beg" || tok == "end|end" || tok == "bq|bq" || tok == "eq|eq" ||
         tok == ",";
}

struct Parser {
  Transcript t;
  std::map<std::string, Speaker::Role, std::less<>> roles;
  bool have_participants = false;
  int line_no = 0;

  [[noreturn]] void fail(ErrorCode code, const std::string& msg) const {
    throw Error(code, "line " + std::to_string(line_no) + ": " + msg);
  }

  void header(std::string_view line) {
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) return;  // @Begin, @End, @UTF8
    const auto key = line.substr(1, colon - 1);
    const auto value = trim(line.substr(colon + 1));
    if (key == "Participants") {
      have_participants = true;
      for (auto entry : split(value, ',')) {
        const auto words = split_ws(entry);
        if (words.size() < 2) continue;
        roles[words.front()] = role_from_name(words.back());
      }
    } else if (key == "ID") {
      const auto f = split(value, '|');
      if (f.size() < 8) fail(ErrorCode::BadHeader, "@ID needs at least 8 fields");
      const auto code = trim(f[2]);
      const auto role = trim(f[7]);
      if (!roles.count(code)) roles[std::string(code)] = role_from_name(role);
      if (role_from_name(role) == Speaker::Role::Child || (role.empty() && code == "CHI")) {
        try {
          t.age_months = parse_age_months(f[3]);
          t.group = parse_group(f[5]);
        } catch (const Error& e) {
          fail(e.code(), e.message());
        }
        t.sex = parse_sex(f[4]);
        t.corpus = std::string(trim(f[1]));
      }
    }
  }

  Speaker speaker(std::string_view code) const {
    Speaker s;
    s.code = std::string(code);
    if (auto it = roles.find(code); it != roles.end())
      s.role = it->second;
    else
      s.role = default_role(code);
    return s;
  }

  void main_tier(std::string_view line) {
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) fail(ErrorCode::MalformedTier, "main tier without colon");
    const auto code = line.substr(1, colon - 1);
    if (!valid_speaker_code(code))
      fail(ErrorCode::MalformedTier, "speaker code must be three uppercase letters: '" + std::string(code) + "'");
    auto tokens = tokenize_main_tier(line.substr(colon + 1));

    std::size_t end = tokens.size();
    while (end > 0 && is_postcode(tokens[end - 1])) --end;
    if (end == 0 || !terminator_of(tokens[end - 1]))
      fail(ErrorCode::MalformedTier, "main tier has no terminator");

    Utterance u;
    u.speaker = speaker(code);
    u.terminator = *terminator_of(tokens[end - 1]);
    for (std::size_t i = end; i < tokens.size(); ++i)
      u.postcodes.emplace_back(trim(bracket_body(tokens[i]).substr(1)));
    u.raw_tokens.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(end - 1));
    try {
      auto stripped = strip_annotations(u.raw_tokens);
      u.clean_tokens = std::move(stripped.clean_tokens);
      u.events = stripped.events;
    } catch (const Error& e) {
      fail(e.code(), e.message());
    }
    t.utterances.push_back(std::move(u));
  }

  void dependent_tier(std::string_view line) {
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) fail(ErrorCode::MalformedTier, "dependent tier without colon");
    if (line.substr(1, colon - 1) != "mor") return;
    if (t.utterances.empty()) fail(ErrorCode::OrphanDependentTier, "%mor before any utterance");
    auto& u = t.utterances.back();
    const std::size_t index = t.utterances.size() - 1;

    std::vector<MorToken> mor;
    for (const auto& tok : split_ws(line.substr(colon + 1))) {
      if (terminator_of(tok) || is_mor_punctuation(tok) || is_bracket(tok)) continue;
      if (tok.find('|') == std::string::npos) {
        t.warnings.push_back("utterance " + std::to_string(index + 1) + ": malformed %mor token '" + tok +
                             "'; %mor dropped");
        u.mor_dropped = true;
        return;
      }
      mor.push_back(parse_mor_token(tok));
    }
    if (mor.size() != u.clean_tokens.size()) {
      t.warnings.push_back("utterance " + std::to_string(index + 1) + ": %mor has " + std::to_string(mor.size()) +
                           " tokens, main tier has " + std::to_string(u.clean_tokens.size()) + "; %mor dropped");
      u.mor_dropped = true;
      return;
    }
    u.mor_tokens = std::move(mor);
  }
};

}  // namespace

std::string_view to_string(Group g) {
  switch (g) {
    case Group::SLI: return "SLI";
    case Group::TD: return "TD";
    case Group::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::string_view to_string(Terminator t) {
  switch (t) {
    case Terminator::Period: return ".";
    case Terminator::Question: return "?";
    case Terminator::Exclaim: return "!";
    case Terminator::TrailOff: return "+...";
  }
  return ".";
}

std::string_view MorToken::category() const {
  std::string_view p = pos_tag;
  return p.substr(0, p.find(':'));
}

bool MorToken::has_suffix(std::string_view s) const {
  return std::find(suffixes.begin(), suffixes.end(), s) != suffixes.end();
}

bool MorToken::has_fusion(std::string_view s) const {
  return std::find(fusions.begin(), fusions.end(), s) != fusions.end();
}

int MorToken::morpheme_count(bool count_fusions) const {
  int n = 1 + static_cast<int>(suffixes.size());
  if (count_fusions) n += static_cast<int>(fusions.size());
  return n;
}

AnnotationEvents& AnnotationEvents::operator+=(const AnnotationEvents& o) {
  fillers += o.fillers;
  repetitions += o.repetitions;
  retracings += o.retracings;
  word_errors += o.word_errors;
  return *this;
}

std::vector<std::string> tokenize_main_tier(std::string_view s) {
  // media bullets are \x15-delimited
  std::string text;
  bool in_bullet = false;
  for (char c : s) {
    if (c == '\x15') {
      in_bullet = !in_bullet;
      continue;
    }
    if (!in_bullet) text.push_back(c);
  }

  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    if (text[i] == '[') {
      const auto close = text.find(']', i);
      const auto end = close == std::string::npos ? text.size() : close + 1;
      out.push_back(text.substr(i, end - i));
      i = end;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j]) && text[j] != '[') ++j;
    std::string_view word(text.data() + i, j - i);
    i = j;
    while (!word.empty() && word.front() == '<') {
      out.emplace_back("<");
      word.remove_prefix(1);
    }
    std::size_t closers = 0;
    while (!word.empty() && word.back() == '>') {
      ++closers;
      word.remove_suffix(1);
    }
    if (!word.empty()) out.emplace_back(word);
    for (std::size_t k = 0; k < closers; ++k) out.emplace_back(">");
  }
  return out;
}

StrippedTokens strip_annotations(std::span<const std::string> raw_tokens) {
  using TokenGroup = std::vector<std::string>;
  std::vector<std::vector<TokenGroup>> frames(1);
  AnnotationEvents ev;

  auto require_material = [&](const std::string& marker) -> std::vector<TokenGroup>& {
    auto& frame = frames.back();
    if (frame.empty()) throw Error(ErrorCode::DanglingMarker, "'" + marker + "' has no preceding material");
    return frame;
  };

  for (const auto& tok : raw_tokens) {
    if (tok == "<") {
      frames.emplace_back();
    } else if (tok == ">") {
      if (frames.size() < 2) throw Error(ErrorCode::UnbalancedScope, "'>' without matching '<'");
      TokenGroup scope;
      for (auto& g : frames.back()) scope.insert(scope.end(), g.begin(), g.end());
      frames.pop_back();
      frames.back().push_back(std::move(scope));
    } else if (tok == "[/]") {
      require_material(tok).pop_back();
      ++ev.repetitions;
    } else if (tok == "[//]" || tok == "[///]" || tok == "[/-]") {
      require_material(tok).pop_back();
      ++ev.retracings;
    } else if (tok == "[*]" || tok.rfind("[* ", 0) == 0) {
      require_material(tok);
      ++ev.word_errors;
    } else if (tok.rfind("[: ", 0) == 0) {
      auto& frame = require_material(tok);
      frame.back() = split_ws(bracket_body(tok).substr(1));
    } else if (is_bracket(tok)) {
      // other codes ([!], [?], [= ...], [=! ...], [+ ...] mid-tier) carry no words
    } else if (tok.rfind("&=", 0) == 0) {
      // simple event such as &=laughs
    } else if (tok.size() > 1 && tok.front() == '&') {
      ++ev.fillers;
    } else if (is_dropped_material(tok)) {
    } else {
      auto w = normalize_word(tok);
      if (!w.empty()) frames.back().push_back(TokenGroup{std::move(w)});
    }
  }
  if (frames.size() != 1) throw Error(ErrorCode::UnbalancedScope, "'<' without matching '>'");

  StrippedTokens out;
  out.events = ev;
  for (auto& g : frames.front()) out.clean_tokens.insert(out.clean_tokens.end(), g.begin(), g.end());
  return out;
}

MorToken parse_mor_token(std::string_view text) {
  const auto tilde = text.find('~');
  const auto head = text.substr(0, tilde);

  MorToken tok;
  auto item = head.substr(0, head.find('^'));  // first of ambiguous alternatives
  const auto bar = item.find('|');
  if (bar == std::string_view::npos || bar == 0)
    throw Error(ErrorCode::MalformedTier, "malformed %mor token '" + std::string(text) + "'");
  auto pos = item.substr(0, bar);
  if (auto hash = pos.rfind('#'); hash != std::string_view::npos) pos = pos.substr(hash + 1);  // un#v
  tok.pos_tag = std::string(pos);
  if (tok.pos_tag.empty()) throw Error(ErrorCode::MalformedTier, "empty pos tag in '" + std::string(text) + "'");

  const auto rest = item.substr(bar + 1);
  const auto first_mark = rest.find_first_of("-&");
  tok.lemma = std::string(rest.substr(0, first_mark));
  std::size_t i = first_mark;
  while (i != std::string_view::npos && i < rest.size()) {
    const char kind = rest[i];
    const auto next = rest.find_first_of("-&", i + 1);
    auto piece = rest.substr(i + 1, next == std::string_view::npos ? std::string_view::npos : next - i - 1);
    if (!piece.empty()) (kind == '-' ? tok.suffixes : tok.fusions).emplace_back(piece);
    i = next;
  }

  if (tilde != std::string_view::npos) {
    for (auto part : split(text.substr(tilde + 1), '~'))
      if (!part.empty()) tok.clitics.push_back(parse_mor_token(part));
  }
  return tok;
}

std::string format_mor_token(const MorToken& tok) {
  std::string out = tok.pos_tag + "|" + tok.lemma;
  for (const auto& s : tok.suffixes) out += "-" + s;
  for (const auto& f : tok.fusions) out += "&" + f;
  for (const auto& c : tok.clitics) out += "~" + format_mor_token(c);
  return out;
}

Transcript parse_chat(std::string_view text, std::string id) {
  // join continuation lines (leading tab) onto their logical line
  std::vector<std::pair<int, std::string>> lines;
  int n = 0;
  for (auto raw : split(text, '\n')) {
    ++n;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (!raw.empty() && raw.front() == '\t' && !lines.empty()) {
      lines.back().second += ' ';
      lines.back().second += raw.substr(1);
      continue;
    }
    if (trim(raw).empty()) continue;
    lines.emplace_back(n, std::string(raw));
  }

  Parser p;
  p.t.id = std::move(id);
  for (const auto& [no, line] : lines) {
    p.line_no = no;
    switch (line.front()) {
      case '@': p.header(line); break;
      case '*': p.main_tier(line); break;
      case '%': p.dependent_tier(line); break;
      default: p.fail(ErrorCode::MalformedTier, "line is neither header nor tier");
    }
  }
  return std::move(p.t);
}

Transcript parse_chat_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_chat(ss.str(), path.stem().string());
  } catch (const Error& e) {
    throw Error(e.code(), path.filename().string() + ": " + e.message());
  }
}

namespace {

std::string_view role_name(Speaker::Role r) {
  switch (r) {
    case Speaker::Role::Child: return "Target_Child";
    case Speaker::Role::Examiner: return "Investigator";
    case Speaker::Role::Other: return "Unidentified";
  }
  return "Unidentified";
}

}  // namespace

std::string to_chat(const Transcript& t) {
  std::ostringstream out;
  out << "@UTF8\n@Begin\n";

  std::vector<Speaker> speakers;
  for (const auto& u : t.utterances)
    if (std::find(speakers.begin(), speakers.end(), u.speaker) == speakers.end()) speakers.push_back(u.speaker);
  if (!speakers.empty()) {
    out << "@Participants:\t";
    for (std::size_t i = 0; i < speakers.size(); ++i)
      out << (i ? ", " : "") << speakers[i].code << ' ' << role_name(speakers[i].role);
    out << '\n';
  }
  for (const auto& s : speakers) {
    out << "@ID:\teng|" << t.corpus << '|' << s.code << '|';
    if (s.is_child()) {
      if (t.age_months) out << *t.age_months / 12 << ';' << (*t.age_months % 12 < 10 ? "0" : "") << *t.age_months % 12 << '.';
      out << '|';
      if (t.sex) out << (*t.sex == Sex::M ? "male" : "female");
      out << '|' << (t.group == Group::Unknown ? "" : to_string(t.group));
    } else {
      out << "||";
    }
    out << "||" << role_name(s.role) << "|||\n";
  }
  for (const auto& u : t.utterances) {
    out << '*' << u.speaker.code << ":\t";
    for (const auto& tok : u.raw_tokens) out << tok << ' ';
    out << to_string(u.terminator);
    for (const auto& pc : u.postcodes) out << " [+ " << pc << ']';
    out << '\n';
    if (u.mor_tokens) {
      out << "%mor:\t";
      for (const auto& m : *u.mor_tokens) out << format_mor_token(m) << ' ';
      out << to_string(u.terminator) << '\n';
    }
  }
  out << "@End\n";
  return out.str();
}

}  // namespace langprofile
