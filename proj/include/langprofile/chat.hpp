#pragma once

// Reader for the subset of CHAT (CHILDES) transcripts used by the feature
// extractor: @ID / @Participants headers, main speaker tiers and %mor tiers.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace langprofile {

enum class Group { SLI, TD, Unknown };
enum class Sex { M, F };
enum class Terminator { Period, Question, Exclaim, TrailOff };

std::string_view to_string(Group g);
std::string_view to_string(Terminator t);

struct Speaker {
  enum class Role { Child, Examiner, Other };
  Role role = Role::Other;
  std::string code;  // three-letter tier code, e.g. "CHI"

  bool is_child() const { return role == Role::Child; }
  bool is_examiner() const { return role == Role::Examiner; }
  bool operator==(const Speaker&) const = default;
};

/// One item of a %mor tier: `pos[:subpos]|lemma(-SUF)*(&FUS)*`, optionally
/// followed by `~`-joined clitics that share the host's surface word.
struct MorToken {
  std::string pos_tag;
  std::string lemma;
  std::vector<std::string> suffixes;
  std::vector<std::string> fusions;
  std::vector<MorToken> clitics;

  /// Part of speech before any `:` subcategory ("det:art" -> "det").
  std::string_view category() const;

  bool has_suffix(std::string_view s) const;
  bool has_fusion(std::string_view s) const;
  bool has_marker(std::string_view s) const { return has_suffix(s) || has_fusion(s); }
  bool inflected() const { return !suffixes.empty() || !fusions.empty(); }

  /// 1 for the stem plus one per suffix; fusions add one each when requested.
  /// Clitics are separate tokens and are not included.
  int morpheme_count(bool count_fusions) const;

  bool operator==(const MorToken&) const = default;
};

struct AnnotationEvents {
  int fillers = 0;
  int repetitions = 0;
  int retracings = 0;
  int word_errors = 0;

  int total() const { return fillers + repetitions + retracings + word_errors; }
  AnnotationEvents& operator+=(const AnnotationEvents& o);
  bool operator==(const AnnotationEvents&) const = default;
};

struct Utterance {
  Speaker speaker;
  std::vector<std::string> raw_tokens;    // terminator and postcodes excluded
  std::vector<std::string> clean_tokens;  // annotation material removed
  std::optional<std::vector<MorToken>> mor_tokens;  // aligned with clean_tokens
  Terminator terminator = Terminator::Period;
  AnnotationEvents events;
  std::vector<std::string> postcodes;  // `[+ gram]` -> "gram"
  bool mor_dropped = false;            // a %mor tier existed but failed to align

  bool is_sentence() const { return terminator != Terminator::TrailOff; }
};

struct Transcript {
  std::string id;
  std::string corpus;
  Group group = Group::Unknown;
  std::optional<int> age_months;
  std::optional<Sex> sex;
  std::vector<Utterance> utterances;
  std::vector<std::string> warnings;
};

struct StrippedTokens {
  std::vector<std::string> clean_tokens;
  AnnotationEvents events;
};

/// Removes fillers, repetition/retrace scopes and bracketed codes from a main
/// tier token list, counting what was removed. Nested `<...>` scopes resolve
/// innermost first.
StrippedTokens strip_annotations(std::span<const std::string> raw_tokens);

/// Splits main-tier content into tokens. Bracketed codes stay whole and
/// scope angle brackets become their own tokens.
std::vector<std::string> tokenize_main_tier(std::string_view content);

MorToken parse_mor_token(std::string_view text);
std::string format_mor_token(const MorToken& tok);

Transcript parse_chat(std::string_view text, std::string id = {});
Transcript parse_chat_file(const std::filesystem::path& path);

/// Writes headers, main tiers (raw tokens, terminator, postcodes) and %mor
/// tiers back out. Unsupported tiers are not preserved.
std::string to_chat(const Transcript& t);

}  // namespace langprofile
