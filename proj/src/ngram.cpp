#include "langprofile/ngram.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "langprofile/error.hpp"
#include "langprofile/numfmt.hpp"

namespace langprofile {

namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_special(std::string_view w) { return w == kBos || w == kEos || w == kUnk; }

void validate(const NGramOptions& o) {
  if (o.order < 1 || o.order > 3) throw std::invalid_argument("n-gram order must be 1, 2 or 3");
  if (!(o.k >= 0)) throw std::invalid_argument("smoothing k must be >= 0");
}

}  // namespace

std::vector<TokenStream> child_streams(const Transcript& t) {
  std::vector<TokenStream> out;
  for (const auto& u : t.utterances) {
    if (!u.speaker.is_child()) continue;
    TokenStream s;
    s.reserve(u.clean_tokens.size());
    for (const auto& w : u.clean_tokens) s.push_back(lower(w));
    out.push_back(std::move(s));
  }
  return out;
}

NGramModel NGramModel::train(std::span<const Transcript> corpus, const NGramOptions& opts) {
  std::vector<TokenStream> streams;
  for (const auto& t : corpus) {
    auto s = child_streams(t);
    streams.insert(streams.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  return train(streams, opts);
}

NGramModel NGramModel::train(std::span<const TokenStream> utterances, const NGramOptions& opts) {
  validate(opts);
  NGramModel m;
  m.opts_ = opts;
  for (const auto& s : utterances)
    for (const auto& w : s) ++m.raw_type_counts_[w];
  if (m.raw_type_counts_.empty()) throw Error(ErrorCode::EmptyCorpus, "no child tokens to train on");
  for (const auto& s : utterances) m.add_stream(s, +1);
  m.rebuild_vocab();
  return m;
}

std::vector<std::string> NGramModel::padded(const TokenStream& raw) const {
  std::vector<std::string> seq;
  seq.reserve(raw.size() + static_cast<std::size_t>(opts_.order));
  if (opts_.pad) seq.insert(seq.end(), static_cast<std::size_t>(opts_.order - 1), std::string(kBos));
  for (const auto& w : raw) seq.push_back(map_token(w));
  if (opts_.pad) seq.emplace_back(kEos);
  return seq;
}

std::string NGramModel::map_token(const std::string& w) const {
  if (is_special(w)) return w;
  if (!vocab_.empty()) return vocab_.count(w) ? w : std::string(kUnk);
  // during training: map by raw frequency
  auto it = raw_type_counts_.find(w);
  const long c = it == raw_type_counts_.end() ? 0 : it->second;
  return c >= opts_.unk_threshold && c > 0 ? w : std::string(kUnk);
}

void NGramModel::add_stream(const TokenStream& raw, long sign) {
  const auto seq = padded(raw);
  const auto n = static_cast<std::size_t>(opts_.order);
  for (std::size_t i = n - 1; i < seq.size(); ++i) {
    std::vector<std::string> gram(seq.begin() + static_cast<std::ptrdiff_t>(i + 1 - n),
                                  seq.begin() + static_cast<std::ptrdiff_t>(i + 1));
    std::vector<std::string> ctx(gram.begin(), gram.end() - 1);
    if ((counts_[gram] += sign) <= 0) counts_.erase(gram);
    if ((context_counts_[ctx] += sign) <= 0) context_counts_.erase(ctx);
  }
}

void NGramModel::rebuild_vocab() {
  vocab_.clear();
  vocab_[std::string(kEos)] = 0;
  vocab_[std::string(kUnk)] = 0;
  for (const auto& [gram, c] : counts_) vocab_[gram.back()] += c;
}

std::vector<std::string> NGramModel::vocabulary() const {
  std::vector<std::string> out;
  for (const auto& [w, c] : vocab_) out.push_back(w);
  return out;
}

double NGramModel::probability(std::span<const std::string> context, std::string_view word) const {
  std::vector<std::string> ctx;
  ctx.reserve(context.size() + 1);
  for (const auto& w : context) ctx.push_back(map_token(w));
  auto cit = context_counts_.find(ctx);
  const double cc = cit == context_counts_.end() ? 0.0 : static_cast<double>(cit->second);
  ctx.push_back(map_token(std::string(word)));
  auto git = counts_.find(ctx);
  const double c = git == counts_.end() ? 0.0 : static_cast<double>(git->second);
  const double denom = cc + opts_.k * static_cast<double>(vocab_.size());
  if (denom <= 0) return 0.0;
  return (c + opts_.k) / denom;
}

double NGramModel::perplexity(const Transcript& t) const { return perplexity(child_streams(t)); }

double NGramModel::perplexity(std::span<const TokenStream> utterances) const {
  const auto n = static_cast<std::size_t>(opts_.order);
  double log_sum = 0.0;
  std::size_t scored = 0;
  for (const auto& raw : utterances) {
    if (raw.empty()) continue;
    const auto seq = padded(raw);
    for (std::size_t i = n - 1; i < seq.size(); ++i) {
      std::span<const std::string> ctx(seq.data() + (i + 1 - n), n - 1);
      const double p = probability(ctx, seq[i]);
      if (p <= 0.0) throw Error(ErrorCode::ZeroProbability, "token '" + seq[i] + "' has zero probability");
      log_sum += std::log(p);
      ++scored;
    }
  }
  if (scored == 0) throw Error(ErrorCode::EmptyTranscript, "no child tokens to score");
  return std::exp(-log_sum / static_cast<double>(scored));
}

NGramModel NGramModel::without(const Transcript& t) const {
  if (opts_.unk_threshold > 1) throw std::logic_error("leave-one-out by subtraction needs unk_threshold <= 1");
  NGramModel m = *this;
  for (const auto& s : child_streams(t)) {
    m.add_stream(s, -1);
    for (const auto& w : s)
      if (--m.raw_type_counts_[w] <= 0) m.raw_type_counts_.erase(w);
  }
  if (m.raw_type_counts_.empty()) throw Error(ErrorCode::EmptyCorpus, "leave-one-out leaves no training tokens");
  m.rebuild_vocab();
  return m;
}

std::string NGramModel::save() const {
  std::ostringstream out;
  out << "order=" << opts_.order << "\tk=" << format_double(opts_.k) << "\tunk_threshold=" << opts_.unk_threshold
      << "\tpad=" << (opts_.pad ? 1 : 0) << '\n';
  for (const auto& [gram, c] : counts_) {
    out << c << '\t';
    for (std::size_t i = 0; i < gram.size(); ++i) out << (i ? " " : "") << gram[i];
    out << '\n';
  }
  return out.str();
}

NGramModel NGramModel::load(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::BadModelFile, "empty model file");
  NGramModel m;
  int fields = 0;
  std::istringstream hs(header);
  for (std::string kv; std::getline(hs, kv, '\t');) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::BadModelFile, "bad header field '" + kv + "'");
    const auto key = kv.substr(0, eq);
    const auto val = parse_double(kv.substr(eq + 1));
    if (!val) throw Error(ErrorCode::BadModelFile, "bad header value '" + kv + "'");
    if (key == "order") m.opts_.order = static_cast<int>(*val);
    else if (key == "k") m.opts_.k = *val;
    else if (key == "unk_threshold") m.opts_.unk_threshold = static_cast<int>(*val);
    else if (key == "pad") m.opts_.pad = *val != 0;
    else throw Error(ErrorCode::BadModelFile, "unknown header key '" + key + "'");
    ++fields;
  }
  if (fields != 4) throw Error(ErrorCode::BadModelFile, "header needs order, k, unk_threshold and pad");
  try {
    validate(m.opts_);
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::BadModelFile, e.what());
  }

  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const auto count = tab == std::string::npos ? std::nullopt : parse_double(line.substr(0, tab));
    if (!count || *count < 1) throw Error(ErrorCode::BadModelFile, "bad count line '" + line + "'");
    std::vector<std::string> gram;
    std::istringstream ws(line.substr(tab + 1));
    for (std::string w; ws >> w;) gram.push_back(w);
    if (gram.size() != static_cast<std::size_t>(m.opts_.order))
      throw Error(ErrorCode::BadModelFile, "n-gram length does not match order: '" + line + "'");
    const auto c = static_cast<long>(*count);
    m.counts_[gram] += c;
    m.context_counts_[std::vector<std::string>(gram.begin(), gram.end() - 1)] += c;
  }
  if (m.counts_.empty()) throw Error(ErrorCode::BadModelFile, "model has no counts");
  m.rebuild_vocab();
  for (const auto& [w, c] : m.vocab_)
    if (!is_special(w) && c > 0) m.raw_type_counts_[w] = c;
  return m;
}

PerplexityFeatures perplexity_features(const Transcript& t, const PerplexityModels& models) {
  const auto streams = child_streams(t);
  PerplexityFeatures f;
  f.s_1g_ppl = models.sli[0].perplexity(streams);
  f.s_2g_ppl = models.sli[1].perplexity(streams);
  f.s_3g_ppl = models.sli[2].perplexity(streams);
  f.d_1g_ppl = models.td[0].perplexity(streams);
  f.d_2g_ppl = models.td[1].perplexity(streams);
  f.d_3g_ppl = models.td[2].perplexity(streams);
  return f;
}

PerplexityModels train_group_models(std::span<const Transcript> corpus, double k, int unk_threshold) {
  std::vector<Transcript> sli, td;
  for (const auto& t : corpus) {
    if (t.group == Group::SLI) sli.push_back(t);
    else if (t.group == Group::TD) td.push_back(t);
  }
  if (sli.empty()) throw Error(ErrorCode::EmptyCorpus, "no SLI transcripts to train on");
  if (td.empty()) throw Error(ErrorCode::EmptyCorpus, "no TD transcripts to train on");
  PerplexityModels m;
  for (int order = 1; order <= 3; ++order) {
    const NGramOptions opts{order, k, unk_threshold, true};
    m.sli[static_cast<std::size_t>(order - 1)] = NGramModel::train(sli, opts);
    m.td[static_cast<std::size_t>(order - 1)] = NGramModel::train(td, opts);
  }
  return m;
}

}  // namespace langprofile
