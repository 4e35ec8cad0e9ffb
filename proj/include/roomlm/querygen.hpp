#pragma once

#include <span>
#include <string>
#include <string_view>

namespace roomlm {

enum class ArticleMode {
  grammatical,              ///< "a" / "an" picked from the room label's pronunciation
  literal_an_parenthesized  ///< the literal "a(n)"
};

/// Sentence format for room queries. Two templates with equal identity() render
/// byte-identical sentences.
struct QueryTemplate {
  std::string version = "v1";
  ArticleMode article_mode = ArticleMode::grammatical;
  std::string separator = ", ";
  std::string final_conjunction = " and ";

  /// Version tag plus article mode, e.g. "v1-grammatical". Recorded in every output file.
  std::string identity() const;
};

std::string_view to_string(ArticleMode mode);
ArticleMode parse_article_mode(std::string_view text);

/// Indefinite article for `noun` under `mode`.
std::string indefinite_article(std::string_view noun, ArticleMode mode);

/// "A room containing o1, o2 and o3 is called a(n) room." Objects are inserted in the
/// given order (ascending entropy is the caller's job).
std::string render_room_query(std::span<const std::string> objects, std::string_view room_label,
                              const QueryTemplate& tmpl = {});

/// Single-object form used to estimate proxy co-occurrences.
std::string render_proxy_query(std::string_view object_label, std::string_view room_label,
                               const QueryTemplate& tmpl = {});

}  // namespace roomlm
