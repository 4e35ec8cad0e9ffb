#include "roomlm/cooccurrence.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "text_util.hpp"

namespace roomlm {

std::string_view to_string(Provenance p) { return p == Provenance::ground_truth ? "ground_truth" : "proxy"; }

std::string_view to_string(CountingMode m) { return m == CountingMode::instances ? "instances" : "presence"; }

Provenance parse_provenance(std::string_view text) {
  if (text == "ground_truth" || text == "gt") return Provenance::ground_truth;
  if (text == "proxy") return Provenance::proxy;
  throw ParameterError("unknown co-occurrence provenance '" + std::string(text) + "'");
}

std::optional<Eigen::Index> CooccurrenceTable::row_of(std::string_view label) const {
  auto it = std::lower_bound(object_labels.begin(), object_labels.end(), label);
  if (it != object_labels.end() && *it == label) return static_cast<Eigen::Index>(it - object_labels.begin());
  // Rows are sorted when built here; a hand-assembled table may not be.
  it = std::find(object_labels.begin(), object_labels.end(), label);
  if (it == object_labels.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - object_labels.begin());
}

std::optional<double> CooccurrenceTable::entropy_of(std::string_view label) const {
  auto r = row_of(label);
  if (!r) return std::nullopt;
  return entropies(*r);
}

bool CooccurrenceTable::operator==(const CooccurrenceTable& o) const {
  return object_space == o.object_space && room_space == o.room_space && object_labels == o.object_labels &&
         room_labels == o.room_labels && probabilities.rows() == o.probabilities.rows() &&
         probabilities.cols() == o.probabilities.cols() && probabilities == o.probabilities &&
         entropies.size() == o.entropies.size() && entropies == o.entropies && provenance == o.provenance &&
         smoothing_alpha == o.smoothing_alpha && counting == o.counting &&
         scorer_identity == o.scorer_identity && template_version == o.template_version;
}

namespace {

void fill_entropies(CooccurrenceTable& t) {
  t.entropies.resize(t.probabilities.rows());
  for (Eigen::Index i = 0; i < t.probabilities.rows(); ++i)
    t.entropies(i) = entropy(t.probabilities.row(i).transpose());
}

}  // namespace

CooccurrenceTable count_ground_truth(const SceneGraph& graph, const std::string& object_space, double alpha,
                                     CountingMode counting) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ParameterError("smoothing alpha must be >= 0");
  const LabelSpace* space = graph.find_object_space(object_space);
  if (!space) throw SchemaError("unknown label space '" + object_space + "'");

  CooccurrenceTable t;
  t.object_space = space->name;
  t.room_space = graph.room_space.name;
  t.object_labels = space->labels;
  std::sort(t.object_labels.begin(), t.object_labels.end());
  t.room_labels = graph.room_space.labels;
  t.provenance = Provenance::ground_truth;
  t.smoothing_alpha = alpha;
  t.counting = counting;

  const auto n_rooms = static_cast<Eigen::Index>(t.room_labels.size());
  if (n_rooms == 0) throw ParameterError("room label space is empty");
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t.object_labels.size()), n_rooms);

  std::unordered_map<std::string, Eigen::Index> row;
  for (std::size_t i = 0; i < t.object_labels.size(); ++i) row.emplace(t.object_labels[i], i);

  for (const auto& room : graph.rooms) {
    const std::size_t col = graph.room_space.index_of(room.gt_label);
    if (col >= t.room_labels.size()) continue;
    std::unordered_set<std::string> seen;
    for (const auto& label : graph.object_labels(room, object_space)) {
      auto it = row.find(label);
      if (it == row.end()) continue;
      if (counting == CountingMode::presence && !seen.insert(label).second) continue;
      counts(it->second, static_cast<Eigen::Index>(col)) += 1.0;
    }
  }

  const Eigen::VectorXd totals = counts.rowwise().sum();
  const Eigen::VectorXd denom = totals.array() + alpha * static_cast<double>(n_rooms);
  if ((denom.array() <= 0.0).any())
    throw ParameterError("an object label has no counts and alpha is 0; its distribution is undefined");
  t.probabilities = (counts.array() + alpha).colwise() / denom.array();
  fill_entropies(t);
  return t;
}

Eigen::VectorXd proxy_conditional(const SentenceScorer& scorer, const std::string& object_label,
                                  std::span<const std::string> room_labels, const QueryTemplate& tmpl) {
  Eigen::VectorXd logp(static_cast<Eigen::Index>(room_labels.size()));
  for (std::size_t j = 0; j < room_labels.size(); ++j)
    logp(static_cast<Eigen::Index>(j)) = scorer.score(render_proxy_query(object_label, room_labels[j], tmpl)).total_logprob;
  return softmax(logp);
}

CooccurrenceTable build_proxy_table(const SentenceScorer& scorer, const SceneGraph& graph,
                                    const std::string& object_space, const QueryTemplate& tmpl,
                                    std::size_t max_inflight) {
  const LabelSpace* space = graph.find_object_space(object_space);
  if (!space) throw SchemaError("unknown label space '" + object_space + "'");

  CooccurrenceTable t;
  t.object_space = space->name;
  t.room_space = graph.room_space.name;
  t.object_labels = space->labels;
  std::sort(t.object_labels.begin(), t.object_labels.end());
  t.room_labels = graph.room_space.labels;
  t.provenance = Provenance::proxy;
  t.scorer_identity = scorer.identity();
  t.template_version = tmpl.identity();
  if (t.room_labels.empty()) throw ParameterError("room label space is empty");

  const std::size_t n_obj = t.object_labels.size(), n_room = t.room_labels.size();
  std::vector<std::string> sentences;
  sentences.reserve(n_obj * n_room);
  for (const auto& o : t.object_labels)
    for (const auto& r : t.room_labels) sentences.push_back(render_proxy_query(o, r, tmpl));

  const auto results = score_batch(scorer, sentences, max_inflight);
  Eigen::MatrixXd logp(static_cast<Eigen::Index>(n_obj), static_cast<Eigen::Index>(n_room));
  for (std::size_t k = 0; k < results.size(); ++k) {
    if (!results[k].ok()) throw TransportError(results[k].error, sentences[k]);
    logp(static_cast<Eigen::Index>(k / n_room), static_cast<Eigen::Index>(k % n_room)) = results[k].score->total_logprob;
  }
  t.probabilities.resize(logp.rows(), logp.cols());
  for (Eigen::Index i = 0; i < logp.rows(); ++i) t.probabilities.row(i) = softmax(logp.row(i).transpose()).transpose();
  fill_entropies(t);
  return t;
}

std::vector<std::string> select_informative(std::span<const std::string> object_labels,
                                            const CooccurrenceTable& table, int k) {
  if (k <= 0) throw ParameterError("k must be positive");
  std::map<std::string, double> distinct;
  for (const auto& label : object_labels) {
    if (distinct.count(label)) continue;
    auto h = table.entropy_of(label);
    if (!h) throw ParameterError("object label '" + label + "' missing from co-occurrence table");
    distinct.emplace(label, *h);
  }
  std::vector<std::pair<double, std::string>> ranked;
  ranked.reserve(distinct.size());
  for (const auto& [label, h] : distinct) ranked.emplace_back(h, label);
  const auto take = std::min(ranked.size(), static_cast<std::size_t>(k));
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end());

  std::vector<std::string> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(std::move(ranked[i].second));
  return out;
}

// --- cache file --------------------------------------------------------------

namespace {
constexpr std::string_view kCoocMagic = "roomlm-cooc";
}

void write_cooccurrence(std::ostream& out, const CooccurrenceTable& t, const std::string& manifest) {
  out << "# " << kCoocMagic << "\t1\n";
  out << "# provenance\t" << to_string(t.provenance) << '\n';
  out << "# alpha\t" << detail::format_17(t.smoothing_alpha) << '\n';
  out << "# counting\t" << to_string(t.counting) << '\n';
  out << "# scorer\t" << t.scorer_identity << '\n';
  out << "# template\t" << t.template_version << '\n';
  out << "# object_space\t" << t.object_space << '\n';
  out << "# room_space\t" << t.room_space << '\n';
  if (!manifest.empty()) out << "# manifest\t" << manifest << '\n';
  out << "object";
  for (const auto& r : t.room_labels) out << '\t' << r;
  out << "\tentropy\n";
  for (Eigen::Index i = 0; i < t.probabilities.rows(); ++i) {
    out << t.object_labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < t.probabilities.cols(); ++j) out << '\t' << detail::format_17(t.probabilities(i, j));
    out << '\t' << detail::format_17(t.entropies(i)) << '\n';
  }
}

CooccurrenceTable read_cooccurrence(std::istream& in) {
  CooccurrenceTable t;
  std::map<std::string, std::string> meta;
  std::vector<std::vector<double>> rows;
  bool have_header = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = detail::strip_cr(raw);
    if (line.empty()) continue;
    auto f = detail::split(line, '\t');
    if (line.substr(0, 2) == "# ") {
      if (f.size() != 2) throw ParseError("bad metadata line", line_no);
      meta[std::string(f[0].substr(2))] = std::string(f[1]);
      continue;
    }
    if (!have_header) {
      if (f.size() < 3 || f.front() != "object" || f.back() != "entropy")
        throw ParseError("expected 'object<TAB>rooms...<TAB>entropy' header", line_no);
      for (std::size_t j = 1; j + 1 < f.size(); ++j) t.room_labels.emplace_back(f[j]);
      have_header = true;
      continue;
    }
    if (f.size() != t.room_labels.size() + 2) throw ParseError("row width does not match header", line_no);
    t.object_labels.emplace_back(f[0]);
    std::vector<double> values(f.size() - 1);
    for (std::size_t j = 1; j < f.size(); ++j)
      if (!detail::parse_double(f[j], values[j - 1])) throw ParseError("bad number", line_no);
    rows.push_back(std::move(values));
  }
  if (meta[std::string(kCoocMagic)] != "1") throw ParseError("not a roomlm-cooc v1 file");
  if (!have_header) throw ParseError("missing column header");

  t.provenance = parse_provenance(meta["provenance"]);
  if (!detail::parse_double(meta["alpha"], t.smoothing_alpha)) throw ParseError("bad alpha");
  t.counting = meta["counting"] == "presence" ? CountingMode::presence : CountingMode::instances;
  t.scorer_identity = meta["scorer"];
  t.template_version = meta["template"];
  t.object_space = meta["object_space"];
  t.room_space = meta["room_space"];

  const auto n = static_cast<Eigen::Index>(rows.size()), m = static_cast<Eigen::Index>(t.room_labels.size());
  t.probabilities.resize(n, m);
  t.entropies.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) t.probabilities(i, j) = rows[i][j];
    t.entropies(i) = rows[i][m];
  }
  return t;
}

}  // namespace roomlm
