#pragma once

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <string>

#include "roomlm/lm_scoring.hpp"

namespace roomlm {

/// Connection settings for a completion service that can echo a prompt with
/// per-token log probabilities.
struct RemoteConfig {
  std::string endpoint;  ///< full URL, e.g. http://localhost:8000/v1/completions
  std::string api_key;   ///< sent as a bearer token when non-empty
  std::string model = "EleutherAI/gpt-j-6B";
  std::size_t max_inflight = 4;
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{60};

  /// Reads ROOMLM_ENDPOINT, ROOMLM_API_KEY and ROOMLM_MODEL. Unset variables keep defaults.
  static RemoteConfig from_environment();
};

/// Request body for scoring `sentence`: echo on, zero generated tokens, logprobs on.
std::string build_logprob_request(const std::string& model, std::string_view sentence);

/// Extracts the prompt's tokens and logprobs from a completion response. Throws
/// TransportError (carrying `sentence`) on anything that is not a well-formed payload.
std::vector<TokenLogProb> parse_logprob_response(std::string_view body, std::string_view sentence);

class RemoteScorer final : public SentenceScorer {
 public:
  explicit RemoteScorer(RemoteConfig config);

  std::string identity() const override;

 protected:
  SentenceScore do_score(std::string_view sentence) const override;

 private:
  class Gate {
   public:
    explicit Gate(std::size_t slots) : free_(slots ? slots : 1) {}
    void acquire();
    void release();

   private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t free_;
  };

  RemoteConfig config_;
  std::string host_;  ///< scheme://host[:port]
  std::string path_;
  mutable Gate gate_;
};

}  // namespace roomlm
