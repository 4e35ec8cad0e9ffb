#include "roomlm/remote_scorer.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "roomlm/errors.hpp"

namespace roomlm {

using nlohmann::json;

RemoteConfig RemoteConfig::from_environment() {
  RemoteConfig c;
  if (const char* v = std::getenv("ROOMLM_ENDPOINT")) c.endpoint = v;
  if (const char* v = std::getenv("ROOMLM_API_KEY")) c.api_key = v;
  if (const char* v = std::getenv("ROOMLM_MODEL")) c.model = v;
  return c;
}

std::string build_logprob_request(const std::string& model, std::string_view sentence) {
  json body = {
      {"model", model},      {"prompt", std::string(sentence)},
      {"max_tokens", 0},     {"echo", true},
      {"logprobs", 0},       {"temperature", 0.0},
  };
  return body.dump();
}

std::vector<TokenLogProb> parse_logprob_response(std::string_view body, std::string_view sentence) {
  const std::string s(sentence);
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw TransportError("response is not JSON", s);
  try {
    const json& lp = doc.at("choices").at(0).at("logprobs");
    const json& tokens = lp.at("tokens");
    const json& values = lp.at("token_logprobs");
    if (!tokens.is_array() || !values.is_array() || tokens.size() != values.size())
      throw TransportError("tokens and token_logprobs differ in shape", s);
    if (tokens.empty()) throw TransportError("response carries no tokens", s);

    std::vector<TokenLogProb> out;
    out.reserve(tokens.size());
    std::string echoed;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      TokenLogProb t;
      t.token = tokens[i].get<std::string>();
      if (!values[i].is_null()) {
        if (!values[i].is_number()) throw TransportError("non-numeric logprob", s);
        double v = values[i].get<double>();
        // fp16 deployments occasionally round a certain token to a hair above zero
        if (v > 0.0 && v <= 1e-6) v = 0.0;
        if (!std::isfinite(v) || v > 0.0) throw TransportError("logprob outside (-inf, 0]", s);
        t.logprob = v;
      }
      echoed += t.token;
      out.push_back(std::move(t));
      // Servers that insist on generating a token append it after the echoed prompt.
      if (echoed == sentence && i + 1 < tokens.size()) break;
    }
    return out;
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed logprob payload: ") + e.what(), s);
  }
}

RemoteScorer::RemoteScorer(RemoteConfig config) : config_(std::move(config)), gate_(config_.max_inflight) {
  if (config_.endpoint.empty()) throw ParameterError("remote scorer needs an endpoint (ROOMLM_ENDPOINT)");
  auto scheme = config_.endpoint.find("://");
  if (scheme == std::string::npos) throw ParameterError("endpoint must be a full URL: " + config_.endpoint);
  auto slash = config_.endpoint.find('/', scheme + 3);
  host_ = config_.endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/completions" : config_.endpoint.substr(slash);
  if (config_.max_attempts < 1) config_.max_attempts = 1;
}

std::string RemoteScorer::identity() const { return "remote:" + config_.model + "@" + host_ + path_; }

void RemoteScorer::Gate::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return free_ > 0; });
  --free_;
}

void RemoteScorer::Gate::release() {
  {
    std::lock_guard lock(mu_);
    ++free_;
  }
  cv_.notify_one();
}

SentenceScore RemoteScorer::do_score(std::string_view sentence) const {
  const std::string s(sentence);
  const std::string body = build_logprob_request(config_.model, sentence);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto backoff = config_.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    gate_.acquire();
    httplib::Result res = [&] {
      httplib::Client cli(host_);
      cli.set_connection_timeout(config_.timeout);
      cli.set_read_timeout(config_.timeout);
      return cli.Post(path_, headers, body, "application/json");
    }();
    gate_.release();

    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
    } else if (res->status == 200) {
      return sum_token_logprobs(s, parse_logprob_response(res->body, sentence), identity());
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200), s);
    }
    if (attempt < config_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError(last_error + " after " + std::to_string(config_.max_attempts) + " attempts", s);
}

}  // namespace roomlm
