#include <doctest.h>

#include "langprofile/chat.hpp"
#include "langprofile/error.hpp"
#include "langprofile/scoring.hpp"

using namespace langprofile;

namespace {

const std::string kData = LANGPROFILE_TEST_DATA;

ErrorCode table_error(const std::string& text) {
  try {
    ScoringTable::parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("DSS is the mean of per-utterance sums") {
  const auto table = ScoringTable::parse("a 3 cat=n\nb 5 cat=v\n");
  const auto t = parse_chat("*CHI:\tdog .\n%mor:\tn|dog .\n*CHI:\trun .\n%mor:\tv|run .\n");
  CHECK(dss_score(t, table) == doctest::Approx(4.0));
}

TEST_CASE("IPSyn credits a structure at most cap times") {
  const auto table = ScoringTable::parse("@cap 2\nnoun 1 cat=n\n");
  const auto t = parse_chat(
      "*CHI:\tdog .\n%mor:\tn|dog .\n*CHI:\tcat .\n%mor:\tn|cat .\n*CHI:\tcow .\n%mor:\tn|cow .\n");
  CHECK(ipsyn_total(t, table) == doctest::Approx(2.0));
}

TEST_CASE("default DSS table on the five-utterance golden transcript") {
  const auto t = parse_chat_file(kData + "/dss_golden.cha");
  const auto table = ScoringTable::default_dss();
  const auto& u = t.utterances;
  // he runs: personal pronoun 2, 3S verb 2, sentence 1
  CHECK(dss_utterance_score(u[0], table) == doctest::Approx(5));
  // I can jump: pronoun 1, modal + verb 4, bare verb 1, sentence 1
  CHECK(dss_utterance_score(u[1], table) == doctest::Approx(7));
  // the dog is big: copula be 2, sentence 1
  CHECK(dss_utterance_score(u[3], table) == doctest::Approx(3));
  // where did you go: wh word 2, you 1, bare verb 1, sentence 1
  CHECK(dss_utterance_score(u[4], table) == doctest::Approx(5));
  // "look ." has no noun or pronoun and is not scorable
  CHECK_FALSE(table.scorable(flatten_mor(*u[5].mor_tokens)));
  CHECK(dss_score(t, table) == doctest::Approx(5.0));
}

TEST_CASE("default IPSyn table on the golden transcript") {
  const auto t = parse_chat_file(kData + "/dss_golden.cha");
  // N1 1, N2 2 (capped from 3), N3 1, V1 2 (capped from 4), V3 1, V4 1, V6 1,
  // V8 1, Q1 1, S1 2
  CHECK(ipsyn_total(t, ScoringTable::default_ipsyn()) == doctest::Approx(13.0));
}

TEST_CASE("no scorable utterances") {
  const auto t = parse_chat("*CHI:\tlook .\n%mor:\tv|look .\n");
  try {
    dss_score(t, ScoringTable::default_dss());
    FAIL("expected NoScorableUtterances");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoScorableUtterances);
  }
}

TEST_CASE("a word error withholds the sentence point") {
  const auto table = ScoringTable::parse("@sentence_point 1\nn 1 cat=n\n");
  const auto ok = parse_chat("*CHI:\tdog .\n%mor:\tn|dog .\n");
  const auto bad = parse_chat("*CHI:\tdogs [*] .\n%mor:\tn|dog .\n");
  CHECK(dss_utterance_score(ok.utterances[0], table) == doctest::Approx(2));
  CHECK(dss_utterance_score(bad.utterances[0], table) == doctest::Approx(1));
}

TEST_CASE("anchored patterns match only at utterance start") {
  const auto table = ScoringTable::parse("q 1 ^ cat=aux cat=pro\n");
  const auto t = parse_chat("*CHI:\tis he here ?\n%mor:\taux|be pro|he adv|here ?\n*CHI:\there is he .\n%mor:\tadv|here aux|be pro|he .\n");
  CHECK(table.rules[0].matches(flatten_mor(*t.utterances[0].mor_tokens)).size() == 1);
  CHECK(table.rules[0].matches(flatten_mor(*t.utterances[1].mor_tokens)).empty());
}

TEST_CASE("malformed tables are rejected") {
  CHECK(table_error("r 1\n") == ErrorCode::BadConfig);
  CHECK(table_error("r x cat=n\n") == ErrorCode::BadConfig);
  CHECK(table_error("r 1 colour=red\n") == ErrorCode::BadConfig);
  CHECK(table_error("@bogus 1\n") == ErrorCode::BadConfig);
  CHECK(table_error("@cap -1\n") == ErrorCode::BadConfig);
}
