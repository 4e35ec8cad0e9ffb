#include "roomlm/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <ostream>

#include <json.hpp>

#include "roomlm/errors.hpp"
#include "text_util.hpp"

namespace roomlm {

using nlohmann::json;

const LabelAccuracy& EvalReport::label(std::string_view room_label) const {
  for (const auto& l : per_label)
    if (l.label == room_label) return l;
  throw ParameterError("no such room label '" + std::string(room_label) + "' in report");
}

bool EvalReport::operator==(const EvalReport& o) const {
  return condition == o.condition && room_labels == o.room_labels && evaluated == o.evaluated &&
         correct == o.correct && overall_accuracy == o.overall_accuracy && per_label == o.per_label &&
         confusion.rows() == o.confusion.rows() && confusion.cols() == o.confusion.cols() &&
         confusion == o.confusion && baselines == o.baselines && failed_rooms == o.failed_rooms;
}

EvalReport evaluate(std::span<const RoomPrediction> predictions, std::span<const std::string> room_labels) {
  if (room_labels.empty()) throw EvaluationError("room label space is empty");
  EvalReport r;
  r.room_labels.assign(room_labels.begin(), room_labels.end());
  const auto n = static_cast<Eigen::Index>(room_labels.size());
  r.confusion = Eigen::MatrixXi::Zero(n, n);

  auto index = [&](const std::string& label, const std::string& room) {
    auto it = std::find(room_labels.begin(), room_labels.end(), label);
    if (it == room_labels.end())
      throw EvaluationError("room '" + room + "': label '" + label + "' not in room label space");
    return static_cast<Eigen::Index>(it - room_labels.begin());
  };

  bool have_condition = false;
  for (const auto& p : predictions) {
    if (p.failed()) {
      r.failed_rooms.push_back(p.room_id);
      continue;
    }
    if (!have_condition) {
      r.condition = p.condition;
      have_condition = true;
    } else if (!(p.condition == r.condition)) {
      throw EvaluationError("predictions mix trial conditions (room '" + p.room_id + "')");
    }
    r.confusion(index(p.gt_label, p.room_id), index(p.predicted_label, p.room_id)) += 1;
  }
  std::sort(r.failed_rooms.begin(), r.failed_rooms.end());
  if (!have_condition) throw EvaluationError("no successfully classified rooms to evaluate");

  r.evaluated = static_cast<std::size_t>(r.confusion.sum());
  r.correct = static_cast<std::size_t>(r.confusion.trace());
  r.overall_accuracy = static_cast<double>(r.correct) / static_cast<double>(r.evaluated);

  const Eigen::VectorXi support = r.confusion.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    LabelAccuracy a{r.room_labels[static_cast<std::size_t>(i)], static_cast<std::size_t>(r.confusion(i, i)),
                    static_cast<std::size_t>(support(i)), std::nullopt};
    if (a.total > 0) a.accuracy = static_cast<double>(a.correct) / static_cast<double>(a.total);
    r.per_label.push_back(std::move(a));
  }

  Eigen::Index top = 0;
  support.maxCoeff(&top);  // first maximum, i.e. earliest in room-label order
  r.baselines.random = 1.0 / static_cast<double>(n);
  r.baselines.majority = static_cast<double>(support(top)) / static_cast<double>(r.evaluated);
  r.baselines.majority_label = r.room_labels[static_cast<std::size_t>(top)];
  return r;
}

ConditionTable compare_conditions(std::span<const EvalReport> reports) {
  if (reports.empty()) throw EvaluationError("no reports to compare");
  ConditionTable t;
  for (auto p : {Provenance::ground_truth, Provenance::proxy})
    for (const auto& r : reports)
      if (r.condition.provenance == p) {
        t.row_keys.emplace_back(to_string(p));
        break;
      }
  for (const auto& r : reports)
    if (std::find(t.column_keys.begin(), t.column_keys.end(), r.condition.object_space) == t.column_keys.end())
      t.column_keys.push_back(r.condition.object_space);
  std::sort(t.column_keys.begin(), t.column_keys.end());

  t.cells.assign(t.row_keys.size(), std::vector<std::optional<double>>(t.column_keys.size()));
  for (const auto& r : reports) {
    const auto row = std::find(t.row_keys.begin(), t.row_keys.end(), to_string(r.condition.provenance)) - t.row_keys.begin();
    const auto col = std::find(t.column_keys.begin(), t.column_keys.end(), r.condition.object_space) - t.column_keys.begin();
    auto& cell = t.cells[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
    if (cell)
      throw EvaluationError("duplicate condition (" + r.condition.object_space + ", " +
                            std::string(to_string(r.condition.provenance)) + ")");
    cell = r.overall_accuracy;
  }
  return t;
}

namespace {

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

}  // namespace

void write_condition_table_text(std::ostream& out, const ConditionTable& t) {
  out << std::left << std::setw(14) << "";
  for (const auto& c : t.column_keys) out << std::setw(14) << c;
  out << '\n';
  for (std::size_t i = 0; i < t.row_keys.size(); ++i) {
    out << std::setw(14) << t.row_keys[i];
    for (const auto& cell : t.cells[i]) out << std::setw(14) << (cell ? percent(*cell) : "NA");
    out << '\n';
  }
}

void write_condition_table_json(std::ostream& out, const ConditionTable& t) {
  json cells = json::array();
  for (std::size_t i = 0; i < t.row_keys.size(); ++i)
    for (std::size_t j = 0; j < t.column_keys.size(); ++j)
      if (t.cells[i][j])
        cells.push_back({{"provenance", t.row_keys[i]}, {"object_space", t.column_keys[j]}, {"accuracy", *t.cells[i][j]}});
  out << json{{"rows", t.row_keys}, {"columns", t.column_keys}, {"cells", cells}}.dump(2) << '\n';
}

void write_report_text(std::ostream& out, const EvalReport& r) {
  out << "condition: object_space=" << r.condition.object_space << " cooc=" << to_string(r.condition.provenance)
      << " k=" << r.condition.k << " template=" << r.condition.template_version << " backend=" << r.condition.backend
      << '\n';
  out << "rooms evaluated: " << r.evaluated << "  failed: " << r.failed_rooms.size() << '\n';
  out << "overall accuracy: " << percent(r.overall_accuracy) << " (" << r.correct << "/" << r.evaluated << ")\n";
  out << "random baseline: " << percent(r.baselines.random) << "  majority baseline (" << r.baselines.majority_label
      << "): " << percent(r.baselines.majority) << "\n\n";

  std::size_t width = 10;
  for (const auto& l : r.room_labels) width = std::max(width, l.size() + 2);
  out << std::left << std::setw(static_cast<int>(width)) << "label" << std::right << std::setw(9) << "correct"
      << std::setw(9) << "total" << std::setw(10) << "accuracy" << '\n';
  for (const auto& a : r.per_label)
    out << std::left << std::setw(static_cast<int>(width)) << a.label << std::right << std::setw(9) << a.correct
        << std::setw(9) << a.total << std::setw(10) << (a.accuracy ? percent(*a.accuracy) : "n/a") << '\n';

  out << "\nconfusion (rows: ground truth, columns: predicted, in label order above)\n";
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.confusion.cols(); ++j) out << (j ? " " : "") << std::setw(4) << r.confusion(i, j);
    out << '\n';
  }
  if (!r.failed_rooms.empty()) {
    out << "\nfailed rooms:";
    for (const auto& id : r.failed_rooms) out << ' ' << id;
    out << '\n';
  }
}

void write_report_json(std::ostream& out, const EvalReport& r, const std::string& manifest) {
  json per_label = json::array();
  for (const auto& a : r.per_label)
    per_label.push_back({{"label", a.label},
                         {"correct", a.correct},
                         {"total", a.total},
                         {"accuracy", a.accuracy ? json(*a.accuracy) : json(nullptr)}});
  json confusion = json::array();
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < r.confusion.cols(); ++j) row.push_back(r.confusion(i, j));
    confusion.push_back(row);
  }
  json doc = {{"condition",
               {{"object_space", r.condition.object_space},
                {"provenance", std::string(to_string(r.condition.provenance))},
                {"k", r.condition.k},
                {"template", r.condition.template_version},
                {"backend", r.condition.backend},
                {"length_normalized", r.condition.length_normalized}}},
              {"room_labels", r.room_labels},
              {"evaluated", r.evaluated},
              {"correct", r.correct},
              {"overall_accuracy", r.overall_accuracy},
              {"per_label", per_label},
              {"confusion", confusion},
              {"baselines",
               {{"random", r.baselines.random},
                {"majority", r.baselines.majority},
                {"majority_label", r.baselines.majority_label}}},
              {"failed_rooms", r.failed_rooms}};
  if (!manifest.empty()) doc["manifest"] = manifest;
  out << doc.dump(2) << '\n';
}

void emit_label_breakdown(std::ostream& out, const EvalReport& r) {
  out << "room_label\tcorrect\ttotal\taccuracy\n";
  for (const auto& a : r.per_label)
    out << a.label << '\t' << a.correct << '\t' << a.total << '\t'
        << (a.accuracy ? detail::format_shortest(*a.accuracy) : "NA") << '\n';
}

}  // namespace roomlm
