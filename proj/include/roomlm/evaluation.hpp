#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "roomlm/inference.hpp"

namespace roomlm {

struct LabelAccuracy {
  std::string label;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::optional<double> accuracy;  ///< absent when total == 0

  bool operator==(const LabelAccuracy&) const = default;
};

struct Baselines {
  double random = 0.0;    ///< 1 / |room labels|
  double majority = 0.0;  ///< frequency of the most common ground-truth label
  std::string majority_label;

  bool operator==(const Baselines&) const = default;
};

struct EvalReport {
  TrialCondition condition;
  std::vector<std::string> room_labels;
  std::size_t evaluated = 0;
  std::size_t correct = 0;
  double overall_accuracy = 0.0;
  std::vector<LabelAccuracy> per_label;  ///< room-label order
  Eigen::MatrixXi confusion;             ///< rows: ground truth, columns: predicted
  Baselines baselines;
  std::vector<std::string> failed_rooms;  ///< sorted

  const LabelAccuracy& label(std::string_view room_label) const;
  bool operator==(const EvalReport& o) const;
};

/// Accuracy, per-label breakdown, confusion matrix and baselines over the rooms that did
/// not fail. Throws EvaluationError when nothing is left to evaluate, when conditions are
/// mixed, or when a label falls outside `room_labels`.
EvalReport evaluate(std::span<const RoomPrediction> predictions, std::span<const std::string> room_labels);

/// Overall accuracies laid out as provenance (rows) x object space (columns).
struct ConditionTable {
  std::vector<std::string> row_keys;     ///< provenances
  std::vector<std::string> column_keys;  ///< object spaces, sorted
  std::vector<std::vector<std::optional<double>>> cells;
};

/// Throws EvaluationError on an empty list or a repeated (object space, provenance) pair.
ConditionTable compare_conditions(std::span<const EvalReport> reports);

void write_condition_table_text(std::ostream& out, const ConditionTable& table);
void write_condition_table_json(std::ostream& out, const ConditionTable& table);

void write_report_text(std::ostream& out, const EvalReport& report);
void write_report_json(std::ostream& out, const EvalReport& report, const std::string& manifest = "");

/// Tab-separated `room_label correct total accuracy`, one row per room label; "NA" marks
/// labels with no evaluated rooms.
void emit_label_breakdown(std::ostream& out, const EvalReport& report);

}  // namespace roomlm
