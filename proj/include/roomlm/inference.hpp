#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "roomlm/cooccurrence.hpp"
#include "roomlm/lm_scoring.hpp"
#include "roomlm/querygen.hpp"
#include "roomlm/scene_model.hpp"

namespace roomlm {

/// Everything that distinguishes one experimental run from another.
struct TrialCondition {
  std::string object_space;
  Provenance provenance = Provenance::ground_truth;
  int k = 3;
  std::string template_version;
  std::string backend;
  bool length_normalized = false;

  bool operator==(const TrialCondition&) const = default;
};

struct Candidate {
  std::string room_label;
  std::string sentence;
  double total_logprob = 0.0;
  int token_count = 0;

  bool operator==(const Candidate&) const = default;
};

struct RoomPrediction {
  std::string room_id;
  std::vector<std::string> selected_objects;
  std::vector<Candidate> candidates;  ///< one per room label, room-space order
  std::string predicted_label;
  std::string gt_label;
  TrialCondition condition;
  std::string failure;  ///< non-empty when the scorer gave up on this room

  bool failed() const { return !failure.empty(); }
  bool correct() const { return !failed() && predicted_label == gt_label; }
  bool operator==(const RoomPrediction&) const = default;
};

struct InferenceOptions {
  int k = 3;
  QueryTemplate query_template;
  bool length_normalize = false;  ///< rank by total / token_count instead of total
  std::size_t max_inflight = 1;
};

/// Highest-scoring candidate's room label; equal scores go to the smaller label.
std::string argmax_label(std::span<const Candidate> candidates, bool length_normalize = false);

/// Selects the room's informative objects, renders one sentence per room label, scores
/// them and takes the argmax. A scorer failure is recorded in `failure`, not thrown.
RoomPrediction classify_room(const SceneGraph& graph, const RoomNode& room, const CooccurrenceTable& table,
                             const SentenceScorer& scorer, const InferenceOptions& options = {});

/// classify_room for every room, ordered by room id. Rooms run on up to
/// options.max_inflight workers.
std::vector<RoomPrediction> classify_graph(const SceneGraph& graph, const CooccurrenceTable& table,
                                           const SentenceScorer& scorer, const InferenceOptions& options = {});

/// JSON Lines: a header record (room labels, condition, manifest), then one record per room.
void write_predictions(std::ostream& out, std::span<const RoomPrediction> predictions,
                       std::span<const std::string> room_labels, const std::string& manifest = "");

struct PredictionFile {
  std::vector<std::string> room_labels;
  std::vector<RoomPrediction> predictions;
};
PredictionFile read_predictions(std::istream& in);

}  // namespace roomlm
