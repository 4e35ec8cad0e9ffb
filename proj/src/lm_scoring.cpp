#include "roomlm/lm_scoring.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "roomlm/errors.hpp"
#include "text_util.hpp"

namespace roomlm {

SentenceScore sum_token_logprobs(std::string sentence, std::vector<TokenLogProb> tokens,
                                 std::string backend) {
  SentenceScore s;
  s.sentence = std::move(sentence);
  s.backend = std::move(backend);
  for (const auto& t : tokens) {
    if (!t.logprob) continue;
    const double lp = *t.logprob;
    if (!std::isfinite(lp) || lp > 0.0)
      throw ParameterError("token logprob must be finite and <= 0, got " + detail::format_shortest(lp));
    s.total_logprob += lp;
    ++s.token_count;
  }
  s.tokens = std::move(tokens);
  return s;
}

double perplexity(const SentenceScore& score) {
  if (score.token_count <= 0) throw ParameterError("perplexity needs at least one scored token");
  return std::exp(-score.total_logprob / score.token_count);
}

SentenceScore SentenceScorer::score(std::string_view sentence) const {
  if (sentence.empty()) throw ParameterError("cannot score an empty sentence");
  return do_score(sentence);
}

std::vector<BatchEntry> score_batch(const SentenceScorer& scorer, std::span<const std::string> sentences,
                                    std::size_t max_inflight) {
  std::vector<BatchEntry> out(sentences.size());
  auto run_one = [&](std::size_t i) {
    try {
      out[i].score = scorer.score(sentences[i]);
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  };

  const std::size_t workers = std::min(std::max<std::size_t>(max_inflight, 1), sentences.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < sentences.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < sentences.size(); i = next++) run_one(i);
      });
  }
  return out;
}

// --- offline scorer --------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

OfflineScorer::OfflineScorer(std::uint64_t seed, std::vector<PairBonus> bonuses)
    : seed_(seed), bonuses_(std::move(bonuses)) {
  std::string table;
  for (const auto& b : bonuses_)
    table += b.object_label + '\t' + b.room_label + '\t' + detail::format_17(b.bonus) + '\n';
  identity_ = "offline:seed=" + std::to_string(seed_) + ":bonus=" + detail::hex64(detail::fnv1a64(table));
}

std::vector<OfflineScorer::PairBonus> OfflineScorer::load_bonus_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open bonus table '" + path.string() + "'");
  std::vector<PairBonus> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = detail::strip_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    auto f = detail::split(line, '\t');
    PairBonus b;
    if (f.size() != 3 || !detail::parse_double(f[2], b.bonus) || !std::isfinite(b.bonus))
      throw ParseError(path.string() + ": expected object<TAB>room<TAB>bonus", line_no);
    b.object_label = std::string(f[0]);
    b.room_label = std::string(f[1]);
    out.push_back(std::move(b));
  }
  return out;
}

double OfflineScorer::max_slack() const {
  double s = 0.0;
  for (const auto& b : bonuses_) s += std::max(b.bonus, 0.0);
  return s;
}

SentenceScore OfflineScorer::do_score(std::string_view sentence) const {
  SentenceScore s;
  s.sentence = std::string(sentence);
  s.backend = identity_;
  std::istringstream words{s.sentence};
  for (std::string w; words >> w;) {
    const std::uint64_t h = splitmix64(detail::fnv1a64(w) ^ seed_);
    const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;
    s.total_logprob -= 0.5 + 2.5 * unit;
    ++s.token_count;
  }
  if (s.token_count == 0) throw ParameterError("cannot score a blank sentence");
  for (const auto& b : bonuses_)
    if (sentence.find(b.object_label) != std::string_view::npos &&
        sentence.find(b.room_label) != std::string_view::npos)
      s.total_logprob += b.bonus;
  return s;
}

// --- score cache -----------------------------------------------------------

namespace {

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

bool unescape(std::string_view s, std::string& out) {
  out.clear();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i == s.size()) return false;
    switch (s[i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: return false;
    }
  }
  return true;
}

std::string cache_key(std::string_view backend, std::string_view sentence) {
  std::string k(backend);
  k += '\0';
  k += sentence;
  return k;
}

}  // namespace

ScoreCache::ScoreCache(std::filesystem::path path) : path_(std::move(path)) {
  bool needs_newline = false;
  if (std::ifstream in{path_, std::ios::binary}) {
    std::string raw;
    while (std::getline(in, raw)) {
      needs_newline = in.eof();  // last line had no terminator
      auto f = detail::split(raw, '\t');
      SentenceScore s;
      long long count = 0;
      if (f.size() != 5 || !detail::parse_double(f[2], s.total_logprob) || !detail::parse_int(f[3], count) ||
          count <= 0 || !unescape(f[4], s.sentence) || detail::hex64(detail::fnv1a64(s.sentence)) != f[1]) {
        ++skipped_;
        continue;
      }
      s.backend = std::string(f[0]);
      s.token_count = static_cast<int>(count);
      entries_[cache_key(s.backend, s.sentence)] = std::move(s);
    }
  }
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw std::runtime_error("cannot open score cache '" + path_.string() + "'");
  if (needs_newline) out_ << '\n' << std::flush;
}

std::optional<SentenceScore> ScoreCache::lookup(const std::string& backend, std::string_view sentence) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(cache_key(backend, sentence));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::append(const SentenceScore& score) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = entries_.try_emplace(cache_key(score.backend, score.sentence), score);
  if (!inserted) return;
  it->second.tokens.reset();
  out_ << score.backend << '\t' << detail::hex64(detail::fnv1a64(score.sentence)) << '\t'
       << detail::format_17(score.total_logprob) << '\t' << score.token_count << '\t'
       << escape(score.sentence) << '\n'
       << std::flush;
}

std::size_t ScoreCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

SentenceScore CachingScorer::do_score(std::string_view sentence) const {
  const std::string backend = inner_.identity();
  if (auto hit = cache_.lookup(backend, sentence)) return *hit;
  SentenceScore s = inner_.score(sentence);
  cache_.append(s);
  return s;
}

}  // namespace roomlm
