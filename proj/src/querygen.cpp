#include "roomlm/querygen.hpp"

#include <array>
#include <cctype>
#include <vector>

#include "roomlm/errors.hpp"
#include "roomlm/scene_model.hpp"

namespace roomlm {

namespace {

// Leading words whose spelling and sound disagree on vowel-ness.
constexpr std::array<std::string_view, 12> kConsonantSoundVowelStart = {
    "utility", "university", "unisex", "uniform", "union", "unit",
    "user",    "usual",      "one",    "once",    "euro",  "ewe"};
constexpr std::array<std::string_view, 5> kVowelSoundConsonantStart = {
    "hour", "honor", "honour", "heir", "honest"};

bool starts_with_word(std::string_view noun, std::string_view word) {
  if (noun.substr(0, word.size()) != word) return false;
  return noun.size() == word.size() || !std::isalpha(static_cast<unsigned char>(noun[word.size()]));
}

}  // namespace

std::string QueryTemplate::identity() const {
  return version + "-" + std::string(to_string(article_mode));
}

std::string_view to_string(ArticleMode mode) {
  return mode == ArticleMode::grammatical ? "grammatical" : "literal";
}

ArticleMode parse_article_mode(std::string_view text) {
  if (text == "grammatical") return ArticleMode::grammatical;
  if (text == "literal") return ArticleMode::literal_an_parenthesized;
  throw ParameterError("unknown article mode '" + std::string(text) + "'");
}

std::string indefinite_article(std::string_view noun, ArticleMode mode) {
  if (mode == ArticleMode::literal_an_parenthesized) return "a(n)";
  const std::string n = normalize_label(noun);
  for (auto w : kConsonantSoundVowelStart)
    if (starts_with_word(n, w)) return "a";
  for (auto w : kVowelSoundConsonantStart)
    if (starts_with_word(n, w)) return "an";
  if (!n.empty() && std::string_view("aeiou").find(n.front()) != std::string_view::npos) return "an";
  return "a";
}

std::string render_room_query(std::span<const std::string> objects, std::string_view room_label,
                              const QueryTemplate& tmpl) {
  if (objects.empty()) throw ParameterError("room query needs at least one object");
  std::string out = "A room containing ";
  const std::size_t n = objects.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out += (i == n - 1) ? tmpl.final_conjunction : tmpl.separator;
    out += normalize_label(objects[i]);
  }
  const std::string room = normalize_label(room_label);
  out += " is called ";
  out += indefinite_article(room, tmpl.article_mode);
  out += ' ';
  out += room;
  out += '.';
  return out;
}

std::string render_proxy_query(std::string_view object_label, std::string_view room_label,
                               const QueryTemplate& tmpl) {
  const std::string object(object_label);
  return render_room_query(std::span<const std::string>(&object, 1), room_label, tmpl);
}

}  // namespace roomlm
