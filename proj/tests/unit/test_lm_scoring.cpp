#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <unistd.h>
#include <fstream>

#include "roomlm/errors.hpp"
#include "roomlm/lm_scoring.hpp"
#include "support/graphs.hpp"
#include "support/scorers.hpp"

using namespace roomlm;
using namespace roomlm::testing;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("roomlm_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

/// Counts how often the wrapped scorer is actually reached.
class CountingScorer final : public SentenceScorer {
 public:
  explicit CountingScorer(const SentenceScorer& inner) : inner_(inner) {}
  std::string identity() const override { return inner_.identity(); }
  mutable std::atomic<int> calls{0};

 protected:
  SentenceScore do_score(std::string_view s) const override {
    ++calls;
    return inner_.score(s);
  }

 private:
  const SentenceScorer& inner_;
};

}  // namespace

TEST_CASE("chain-rule sum of token log probabilities") {
  SentenceScore s = sum_token_logprobs("x y z", {{"x", -1.0}, {"y", -2.0}, {"z", -0.5}}, "test");
  CHECK(s.total_logprob == -3.5);
  CHECK(s.token_count == 3);
  REQUIRE(s.tokens);
  CHECK(s.tokens->size() == 3);
}

TEST_CASE("a missing first-token term is skipped") {
  SentenceScore s = sum_token_logprobs("x y z", {{"x", std::nullopt}, {"y", -2.0}, {"z", -0.5}}, "test");
  CHECK(s.total_logprob == -2.5);
  CHECK(s.token_count == 2);
}

TEST_CASE("invalid token terms") {
  CHECK_THROWS_AS(sum_token_logprobs("x", {{"x", 0.25}}, "t"), ParameterError);
  CHECK_THROWS_AS(sum_token_logprobs("x", {{"x", -INFINITY}}, "t"), ParameterError);
  CHECK_THROWS_AS(sum_token_logprobs("x", {{"x", NAN}}, "t"), ParameterError);
  CHECK(sum_token_logprobs("x", {{"x", 0.0}}, "t").total_logprob == 0.0);
}

TEST_CASE("perplexity") {
  SentenceScore s;
  s.total_logprob = -2.0 * std::log(2.0);
  s.token_count = 2;
  CHECK(perplexity(s) == doctest::Approx(2.0).epsilon(1e-12));
  s.total_logprob = 0.0;
  CHECK(perplexity(s) == 1.0);
  s.total_logprob = -3.0;
  s.token_count = 3;
  CHECK(perplexity(s) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
  s.token_count = 0;
  CHECK_THROWS_AS(perplexity(s), ParameterError);
}

TEST_CASE("offline scorer") {
  OfflineScorer a(1), b(1), c(2);
  const std::string s = "A room containing toilet is called a bathroom.";

  SUBCASE("deterministic per seed") {
    CHECK(a.score(s).total_logprob == b.score(s).total_logprob);
    CHECK(a.identity() == b.identity());
    CHECK(a.identity() != c.identity());
    CHECK(a.score(s).total_logprob != c.score(s).total_logprob);
  }
  SUBCASE("per-token cost bounds") {
    const SentenceScore r = a.score(s);
    CHECK(r.token_count == 8);
    CHECK(r.total_logprob <= -0.5 * 8);
    CHECK(r.total_logprob >= -3.0 * 8);
    CHECK(r.backend == a.identity());
  }
  SUBCASE("empty or blank sentences") {
    CHECK_THROWS_AS(a.score(""), ParameterError);
    CHECK_THROWS_AS(a.score("   "), ParameterError);
  }
  SUBCASE("bonus table") {
    const auto bonuses = OfflineScorer::load_bonus_table(fixture("bonus_table.tsv"));
    REQUIRE_FALSE(bonuses.empty());
    OfflineScorer boosted(1, bonuses);
    CHECK(boosted.identity() != a.identity());
    const auto& first = bonuses.front();
    const std::string hit = "A room containing " + first.object_label + " is called a " + first.room_label + ".";
    double expected = a.score(hit).total_logprob;
    for (const auto& bb : bonuses)
      if (hit.find(bb.object_label) != std::string::npos && hit.find(bb.room_label) != std::string::npos)
        expected += bb.bonus;
    CHECK(boosted.score(hit).total_logprob == doctest::Approx(expected).epsilon(1e-15));
    CHECK(boosted.max_slack() >= 0.0);
  }
  SUBCASE("malformed bonus table") {
    const fs::path dir = fresh_dir("bonus");
    std::ofstream(dir / "bad.tsv") << "toilet\tbathroom\n";
    CHECK_THROWS_AS(OfflineScorer::load_bonus_table(dir / "bad.tsv"), ParseError);
    CHECK_THROWS_AS(OfflineScorer::load_bonus_table(dir / "missing.tsv"), ParseError);
    fs::remove_all(dir);
  }
}

TEST_CASE("score_batch") {
  OfflineScorer base(4);
  SUBCASE("empty input") {
    CHECK(score_batch(base, std::vector<std::string>{}, 4).empty());
  }
  SUBCASE("order preserved under concurrency") {
    std::vector<std::string> sentences;
    for (int i = 0; i < 40; ++i) sentences.push_back("sentence number " + std::to_string(i));
    const auto serial = score_batch(base, sentences, 1);
    const auto parallel = score_batch(base, sentences, 6);
    REQUIRE(parallel.size() == sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      REQUIRE(parallel[i].ok());
      CHECK(parallel[i].score->sentence == sentences[i]);
      CHECK(parallel[i].score->total_logprob == serial[i].score->total_logprob);
    }
  }
  SUBCASE("partial failure marks only the failing slot") {
    FlakyScorer flaky(base, "bad");
    const std::vector<std::string> sentences{"good one", "bad one", "", "good two"};
    const auto r = score_batch(flaky, sentences, 3);
    CHECK(r[0].ok());
    CHECK_FALSE(r[1].ok());
    CHECK(r[1].error.find("simulated outage") != std::string::npos);
    CHECK_FALSE(r[2].ok());
    CHECK(r[3].ok());
  }
}

TEST_CASE("caching scorer is transparent") {
  const fs::path dir = fresh_dir("cache");
  OfflineScorer base(8);
  CountingScorer counted(base);
  const std::vector<std::string> sentences{"a b c", "tab\there", "line\nbreak", "back\\slash", "a b c"};
  {
    ScoreCache cache(dir / "scores.tsv");
    CachingScorer cached(counted, cache);
    CHECK(cached.identity() == base.identity());
    for (const auto& s : sentences) {
      const SentenceScore got = cached.score(s);
      CHECK(got.total_logprob == base.score(s).total_logprob);
      CHECK(got.token_count == base.score(s).token_count);
    }
    CHECK(counted.calls == 4);
    CHECK(cache.size() == 4);
  }
  {
    ScoreCache cache(dir / "scores.tsv");
    CHECK(cache.size() == 4);
    CHECK(cache.skipped_lines() == 0);
    CachingScorer cached(counted, cache);
    for (const auto& s : sentences) CHECK(cached.score(s).total_logprob == base.score(s).total_logprob);
    CHECK(counted.calls == 4);
  }
  fs::remove_all(dir);
}

TEST_CASE("score cache resumes after a torn final line") {
  const fs::path dir = fresh_dir("torn");
  const fs::path file = dir / "scores.tsv";
  OfflineScorer base(8);
  {
    ScoreCache cache(file);
    cache.append(base.score("first sentence"));
    cache.append(base.score("second sentence"));
  }
  // Simulate a kill mid-write: chop the last line in half.
  std::string content;
  {
    std::ifstream in(file, std::ios::binary);
    content.assign(std::istreambuf_iterator<char>(in), {});
  }
  content.resize(content.size() - 9);
  std::ofstream(file, std::ios::binary | std::ios::trunc) << content;

  {
    ScoreCache cache(file);
    CHECK(cache.size() == 1);
    CHECK(cache.skipped_lines() == 1);
    CHECK(cache.lookup(base.identity(), "first sentence"));
    CHECK_FALSE(cache.lookup(base.identity(), "second sentence"));
    CountingScorer counted(base);
    CachingScorer cached(counted, cache);
    CHECK(cached.score("second sentence").total_logprob == base.score("second sentence").total_logprob);
    CHECK(counted.calls == 1);
  }
  {
    ScoreCache cache(file);
    CHECK(cache.size() == 2);
    CHECK(cache.skipped_lines() == 1);
    const auto hit = cache.lookup(base.identity(), "second sentence");
    REQUIRE(hit);
    CHECK(hit->total_logprob == base.score("second sentence").total_logprob);
  }
  fs::remove_all(dir);
}

TEST_CASE("score cache keys on backend identity") {
  const fs::path dir = fresh_dir("keyed");
  OfflineScorer a(1), b(2);
  ScoreCache cache(dir / "scores.tsv");
  CachingScorer ca(a, cache), cb(b, cache);
  CHECK(ca.score("same words").total_logprob == a.score("same words").total_logprob);
  CHECK(cb.score("same words").total_logprob == b.score("same words").total_logprob);
  CHECK(cache.size() == 2);
  fs::remove_all(dir);
}
