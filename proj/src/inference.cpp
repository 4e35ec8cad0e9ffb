#include "roomlm/inference.hpp"

#include <algorithm>
#include <atomic>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace roomlm {

using nlohmann::json;

std::string argmax_label(std::span<const Candidate> candidates, bool length_normalize) {
  if (candidates.empty()) throw ParameterError("argmax over no candidates");
  auto value = [&](const Candidate& c) {
    return length_normalize && c.token_count > 0 ? c.total_logprob / c.token_count : c.total_logprob;
  };
  const Candidate* best = &candidates.front();
  for (const auto& c : candidates.subspan(1)) {
    const double v = value(c), b = value(*best);
    if (v > b || (v == b && c.room_label < best->room_label)) best = &c;
  }
  return best->room_label;
}

RoomPrediction classify_room(const SceneGraph& graph, const RoomNode& room, const CooccurrenceTable& table,
                             const SentenceScorer& scorer, const InferenceOptions& options) {
  RoomPrediction p;
  p.room_id = room.id;
  p.gt_label = room.gt_label;
  p.condition = {table.object_space, table.provenance, options.k, options.query_template.identity(),
                 scorer.identity(), options.length_normalize};

  const auto labels = graph.object_labels(room, table.object_space);
  if (labels.empty()) throw ParameterError("room '" + room.id + "' has no objects to describe it");
  p.selected_objects = select_informative(labels, table, options.k);

  std::vector<std::string> sentences;
  sentences.reserve(table.room_labels.size());
  for (const auto& r : table.room_labels)
    sentences.push_back(render_room_query(p.selected_objects, r, options.query_template));

  const auto scores = score_batch(scorer, sentences);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!scores[j].ok()) {
      p.failure = scores[j].error;
      p.candidates.clear();
      return p;
    }
    p.candidates.push_back({table.room_labels[j], sentences[j], scores[j].score->total_logprob,
                            scores[j].score->token_count});
  }
  p.predicted_label = argmax_label(p.candidates, options.length_normalize);
  return p;
}

std::vector<RoomPrediction> classify_graph(const SceneGraph& graph, const CooccurrenceTable& table,
                                           const SentenceScorer& scorer, const InferenceOptions& options) {
  std::vector<const RoomNode*> rooms;
  for (const auto& r : graph.rooms) rooms.push_back(&r);
  std::sort(rooms.begin(), rooms.end(), [](const RoomNode* a, const RoomNode* b) { return a->id < b->id; });

  std::vector<RoomPrediction> out(rooms.size());
  const std::size_t workers = std::min(std::max<std::size_t>(options.max_inflight, 1), rooms.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < rooms.size(); ++i) out[i] = classify_room(graph, *rooms[i], table, scorer, options);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < rooms.size(); i = next++) {
          try {
            out[i] = classify_room(graph, *rooms[i], table, scorer, options);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

// --- prediction files --------------------------------------------------------

namespace {

json condition_json(const TrialCondition& c) {
  return {{"object_space", c.object_space},
          {"provenance", std::string(to_string(c.provenance))},
          {"k", c.k},
          {"template", c.template_version},
          {"backend", c.backend},
          {"length_normalized", c.length_normalized}};
}

TrialCondition condition_from(const json& j) {
  TrialCondition c;
  c.object_space = j.at("object_space").get<std::string>();
  c.provenance = parse_provenance(j.at("provenance").get<std::string>());
  c.k = j.at("k").get<int>();
  c.template_version = j.at("template").get<std::string>();
  c.backend = j.at("backend").get<std::string>();
  c.length_normalized = j.value("length_normalized", false);
  return c;
}

}  // namespace

void write_predictions(std::ostream& out, std::span<const RoomPrediction> predictions,
                       std::span<const std::string> room_labels, const std::string& manifest) {
  json header = {{"kind", "roomlm-predictions"},
                 {"version", 1},
                 {"room_labels", std::vector<std::string>(room_labels.begin(), room_labels.end())}};
  if (!predictions.empty()) header["condition"] = condition_json(predictions.front().condition);
  if (!manifest.empty()) header["manifest"] = manifest;
  out << header.dump() << '\n';

  for (const auto& p : predictions) {
    json cands = json::array();
    for (const auto& c : p.candidates)
      cands.push_back({{"room_label", c.room_label},
                       {"sentence", c.sentence},
                       {"total_logprob", c.total_logprob},
                       {"token_count", c.token_count}});
    json rec = {{"room_id", p.room_id},
                {"gt_label", p.gt_label},
                {"predicted_label", p.predicted_label},
                {"selected_objects", p.selected_objects},
                {"candidates", cands},
                {"condition", condition_json(p.condition)},
                {"failure", p.failed() ? json(p.failure) : json(nullptr)}};
    out << rec.dump() << '\n';
  }
}

PredictionFile read_predictions(std::istream& in) {
  PredictionFile f;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("prediction record is not JSON", line_no);
    try {
      if (!header) {
        if (j.value("kind", "") != "roomlm-predictions" || j.value("version", 0) != 1)
          throw ParseError("not a roomlm-predictions v1 file", line_no);
        f.room_labels = j.at("room_labels").get<std::vector<std::string>>();
        header = true;
        continue;
      }
      RoomPrediction p;
      p.room_id = j.at("room_id").get<std::string>();
      p.gt_label = j.at("gt_label").get<std::string>();
      p.predicted_label = j.at("predicted_label").get<std::string>();
      p.selected_objects = j.at("selected_objects").get<std::vector<std::string>>();
      for (const auto& c : j.at("candidates"))
        p.candidates.push_back({c.at("room_label").get<std::string>(), c.at("sentence").get<std::string>(),
                                c.at("total_logprob").get<double>(), c.at("token_count").get<int>()});
      p.condition = condition_from(j.at("condition"));
      if (!j.at("failure").is_null()) p.failure = j.at("failure").get<std::string>();
      f.predictions.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed prediction record: ") + e.what(), line_no);
    }
  }
  if (!header) throw ParseError("empty prediction file");
  return f;
}

}  // namespace roomlm
