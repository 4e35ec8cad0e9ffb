#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace roomlm {

/// One token of a scored sentence. `logprob` is log p(token | prefix); backends that
/// cannot condition on an empty prefix leave it empty for the first token.
struct TokenLogProb {
  std::string token;
  std::optional<double> logprob;
};

struct SentenceScore {
  std::string sentence;
  double total_logprob = 0.0;
  int token_count = 0;
  std::string backend;
  std::optional<std::vector<TokenLogProb>> tokens;
};

/// Chain-rule sentence log probability: the sum of every present per-token term.
/// token_count counts the terms that were summed. Throws ParameterError on a
/// non-finite or positive term.
SentenceScore sum_token_logprobs(std::string sentence, std::vector<TokenLogProb> tokens,
                                 std::string backend);

/// Per-token perplexity exp(-total / token_count).
double perplexity(const SentenceScore& score);

/// Anything that can assign a log probability to a sentence.
///
/// Implementations must be safe to call from several threads at once and must
/// return the same score for the same sentence.
class SentenceScorer {
 public:
  virtual ~SentenceScorer() = default;

  /// Stable name of the backend, recorded in every output.
  virtual std::string identity() const = 0;

  /// Throws ParameterError on an empty sentence, TransportError when the backend fails.
  SentenceScore score(std::string_view sentence) const;

 protected:
  virtual SentenceScore do_score(std::string_view sentence) const = 0;
};

/// Outcome of one batch slot. Exactly one of `score` / `error` is meaningful.
struct BatchEntry {
  std::optional<SentenceScore> score;
  std::string error;

  bool ok() const { return score.has_value(); }
};

/// Scores every sentence, keeping input order. A failing sentence marks its own slot
/// and does not abort the rest. Up to `max_inflight` calls run concurrently.
std::vector<BatchEntry> score_batch(const SentenceScorer& scorer, std::span<const std::string> sentences,
                                    std::size_t max_inflight = 1);

/// Deterministic stand-in for a language model.
///
/// Each whitespace token costs a seeded, hash-derived amount in [-3, -0.5]; on top of
/// that, every (object, room) pair from the bonus table whose two strings both occur in
/// the sentence adds its bonus. Positive bonuses can push a total above zero; the slack
/// is bounded by the sum of positive bonuses.
class OfflineScorer final : public SentenceScorer {
 public:
  struct PairBonus {
    std::string object_label;
    std::string room_label;
    double bonus = 0.0;
  };

  explicit OfflineScorer(std::uint64_t seed = 0, std::vector<PairBonus> bonuses = {});

  /// Tab-separated `object<TAB>room<TAB>bonus` rows, `#` comments.
  static std::vector<PairBonus> load_bonus_table(const std::filesystem::path& path);

  std::string identity() const override { return identity_; }
  double max_slack() const;

 protected:
  SentenceScore do_score(std::string_view sentence) const override;

 private:
  std::uint64_t seed_;
  std::vector<PairBonus> bonuses_;
  std::string identity_;
};

/// Append-only on-disk record of scored sentences, keyed by (backend, sentence).
///
/// Line format: backend, FNV-1a-64 hex of the sentence, total logprob (17 significant
/// digits), token count, escaped sentence; tab-separated. Lines that fail to parse or
/// whose hash does not match (a torn write) are ignored on load.
class ScoreCache {
 public:
  explicit ScoreCache(std::filesystem::path path);

  std::optional<SentenceScore> lookup(const std::string& backend, std::string_view sentence) const;
  void append(const SentenceScore& score);

  std::size_t size() const;
  std::size_t skipped_lines() const { return skipped_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, SentenceScore> entries_;
  std::ofstream out_;
  std::size_t skipped_ = 0;
};

/// Serves repeated sentences from a ScoreCache and records new ones. Its identity is the
/// wrapped scorer's, so cached and uncached runs are interchangeable.
class CachingScorer final : public SentenceScorer {
 public:
  CachingScorer(const SentenceScorer& inner, ScoreCache& cache) : inner_(inner), cache_(cache) {}

  std::string identity() const override { return inner_.identity(); }

 protected:
  SentenceScore do_score(std::string_view sentence) const override;

 private:
  const SentenceScorer& inner_;
  ScoreCache& cache_;
};

}  // namespace roomlm
