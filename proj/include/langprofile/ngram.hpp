#pragma once

// Add-k smoothed n-gram language models over child utterances, used for the
// six perplexity features.

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "langprofile/chat.hpp"

namespace langprofile {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

struct NGramOptions {
  int order = 1;           // 1, 2 or 3
  double k = 1.0;          // add-k smoothing constant, >= 0
  int unk_threshold = 1;   // types seen fewer times than this become <unk>
  bool pad = true;         // (order-1) x <s> before and </s> after each utterance
};

using TokenStream = std::vector<std::string>;

/// Lowercased child clean tokens, one stream per child utterance.
std::vector<TokenStream> child_streams(const Transcript& t);

class NGramModel {
 public:
  static NGramModel train(std::span<const Transcript> corpus, const NGramOptions& opts);
  static NGramModel train(std::span<const TokenStream> utterances, const NGramOptions& opts);

  /// P(word | context) under add-k smoothing; `context` holds the previous
  /// order-1 tokens (already mapped to the vocabulary).
  double probability(std::span<const std::string> context, std::string_view word) const;

  double perplexity(const Transcript& t) const;
  double perplexity(std::span<const TokenStream> utterances) const;

  /// Model equal to one trained without `t`. Requires unk_threshold <= 1,
  /// where removing counts is exactly equivalent to retraining.
  NGramModel without(const Transcript& t) const;

  std::string save() const;
  static NGramModel load(std::string_view text);

  const NGramOptions& options() const { return opts_; }
  int order() const { return opts_.order; }
  /// Size of the predicted vocabulary: seen types plus </s> and <unk>.
  std::size_t vocab_size() const { return vocab_.size(); }
  bool in_vocab(std::string_view w) const { return vocab_.count(std::string(w)) > 0; }
  const std::map<std::vector<std::string>, long>& counts() const { return counts_; }
  /// Every token that can be predicted (excludes <s>).
  std::vector<std::string> vocabulary() const;

  NGramModel() = default;

 private:
  void add_stream(const TokenStream& raw, long sign);
  void rebuild_vocab();
  std::vector<std::string> padded(const TokenStream& raw) const;
  std::string map_token(const std::string& w) const;

  NGramOptions opts_;
  std::map<std::string, long> raw_type_counts_;          // before <unk> mapping
  std::map<std::vector<std::string>, long> counts_;      // full n-grams
  std::map<std::vector<std::string>, long> context_counts_;
  std::map<std::string, long, std::less<>> vocab_;       // predicted types -> count
};

struct PerplexityModels {
  std::array<NGramModel, 3> sli;  // orders 1, 2, 3
  std::array<NGramModel, 3> td;
};

struct PerplexityFeatures {
  double s_1g_ppl = 0, s_2g_ppl = 0, s_3g_ppl = 0;
  double d_1g_ppl = 0, d_2g_ppl = 0, d_3g_ppl = 0;
};

PerplexityFeatures perplexity_features(const Transcript& t, const PerplexityModels& models);

/// Pools every SLI and every TD transcript into order-1/2/3 models.
PerplexityModels train_group_models(std::span<const Transcript> corpus, double k, int unk_threshold);

}  // namespace langprofile
