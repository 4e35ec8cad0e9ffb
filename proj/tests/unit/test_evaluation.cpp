#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "roomlm/errors.hpp"
#include "roomlm/evaluation.hpp"
#include "roomlm/house_convert.hpp"

using namespace roomlm;

namespace {

TrialCondition cond(const std::string& space = "nyuclass", Provenance prov = Provenance::ground_truth) {
  return {space, prov, 3, "v1-grammatical", "offline:seed=0", false};
}

RoomPrediction pred(const std::string& id, const std::string& gt, const std::string& predicted,
                    const TrialCondition& c = cond()) {
  RoomPrediction p;
  p.room_id = id;
  p.gt_label = gt;
  p.predicted_label = predicted;
  p.condition = c;
  return p;
}

const std::vector<std::string> kLabels{"bathroom", "bedroom", "kitchen"};

/// bathroom 3/4, bedroom 1/2, kitchen unseen, one failed room.
std::vector<RoomPrediction> hand_built() {
  std::vector<RoomPrediction> p{
      pred("a", "bathroom", "bathroom"), pred("b", "bathroom", "bathroom"), pred("c", "bathroom", "bedroom"),
      pred("d", "bathroom", "bathroom"), pred("e", "bedroom", "bedroom"),   pred("f", "bedroom", "kitchen"),
      pred("g", "kitchen", "")};
  p.back().failure = "backend gave up";
  return p;
}

}  // namespace

TEST_CASE("accuracy and per-label breakdown") {
  const auto preds = hand_built();
  const EvalReport r = evaluate(preds, kLabels);
  CHECK(r.evaluated == 6);
  CHECK(r.correct == 4);
  CHECK(r.overall_accuracy == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
  CHECK(r.label("bathroom").correct == 3);
  CHECK(r.label("bathroom").total == 4);
  CHECK(*r.label("bathroom").accuracy == 0.75);
  CHECK(*r.label("bedroom").accuracy == 0.5);
  CHECK_FALSE(r.label("kitchen").accuracy);
  CHECK(r.label("kitchen").total == 0);
  CHECK(r.failed_rooms == std::vector<std::string>{"g"});

  double weighted = 0.0;
  std::size_t support = 0;
  for (const auto& l : r.per_label) {
    if (l.accuracy) weighted += *l.accuracy * static_cast<double>(l.total);
    support += l.total;
  }
  CHECK(support == r.evaluated);
  CHECK(std::abs(weighted / static_cast<double>(support) - r.overall_accuracy) < 1e-12);
}

TEST_CASE("confusion matrix") {
  const auto preds = hand_built();
  const EvalReport r = evaluate(preds, kLabels);
  Eigen::MatrixXi want(3, 3);
  want << 3, 1, 0,  //
      0, 1, 1,      //
      0, 0, 0;
  CHECK(r.confusion == want);
  CHECK(r.confusion.sum() == static_cast<int>(r.evaluated));
  CHECK(r.confusion.trace() == static_cast<int>(r.correct));
}

TEST_CASE("baselines") {
  SUBCASE("small set") {
    const auto preds = hand_built();
    const EvalReport r = evaluate(preds, kLabels);
    CHECK(r.baselines.random == doctest::Approx(1.0 / 3.0));
    CHECK(r.baselines.majority == doctest::Approx(4.0 / 6.0));
    CHECK(r.baselines.majority_label == "bathroom");
  }
  SUBCASE("full-size label set") {
    const auto labels = indoor_room_labels();
    REQUIRE(labels.size() == 23);
    std::vector<RoomPrediction> preds;
    int id = 0;
    auto add = [&](const std::string& gt, int n) {
      for (int i = 0; i < n; ++i) preds.push_back(pred("r" + std::to_string(id++), gt, "bathroom"));
    };
    add("bathroom", 365);
    int others = 0;
    for (const auto& l : labels) {
      if (l == "bathroom") continue;
      add(l, others < 17 ? 69 : 68);
      ++others;
    }
    REQUIRE(preds.size() == 1878);
    const EvalReport r = evaluate(preds, labels);
    CHECK(r.baselines.random == doctest::Approx(1.0 / 23.0).epsilon(1e-15));
    CHECK(r.baselines.majority == doctest::Approx(365.0 / 1878.0).epsilon(1e-15));
    CHECK(r.baselines.majority_label == "bathroom");
    CHECK(r.overall_accuracy == r.baselines.majority);
  }
}

TEST_CASE("evaluation errors") {
  std::vector<RoomPrediction> all_failed{pred("a", "bathroom", "")};
  all_failed[0].failure = "x";
  CHECK_THROWS_AS(evaluate(all_failed, kLabels), EvaluationError);
  CHECK_THROWS_AS(evaluate(std::vector<RoomPrediction>{}, kLabels), EvaluationError);

  std::vector<RoomPrediction> mixed{pred("a", "bathroom", "bathroom"),
                                    pred("b", "bathroom", "bathroom", cond("mpcat40"))};
  CHECK_THROWS_AS(evaluate(mixed, kLabels), EvaluationError);

  std::vector<RoomPrediction> unknown{pred("a", "garage", "bathroom")};
  CHECK_THROWS_AS(evaluate(unknown, kLabels), EvaluationError);
}

TEST_CASE("label breakdown file") {
  const auto preds = hand_built();
  std::ostringstream out;
  emit_label_breakdown(out, evaluate(preds, kLabels));
  CHECK(out.str() ==
        "room_label\tcorrect\ttotal\taccuracy\n"
        "bathroom\t3\t4\t0.75\n"
        "bedroom\t1\t2\t0.5\n"
        "kitchen\t0\t0\tNA\n");
}

TEST_CASE("condition table") {
  auto report_for = [](const std::string& space, Provenance prov, int correct) {
    std::vector<RoomPrediction> p;
    for (int i = 0; i < 4; ++i)
      p.push_back(pred("r" + std::to_string(i), "bathroom", i < correct ? "bathroom" : "kitchen", cond(space, prov)));
    return evaluate(p, kLabels);
  };

  SUBCASE("two by two") {
    std::vector<EvalReport> reports{report_for("nyuclass", Provenance::proxy, 1),
                                    report_for("mpcat40", Provenance::ground_truth, 2),
                                    report_for("nyuclass", Provenance::ground_truth, 3),
                                    report_for("mpcat40", Provenance::proxy, 4)};
    const ConditionTable t = compare_conditions(reports);
    CHECK(t.row_keys == std::vector<std::string>{"ground_truth", "proxy"});
    CHECK(t.column_keys == std::vector<std::string>{"mpcat40", "nyuclass"});
    CHECK(*t.cells[0][0] == 0.5);
    CHECK(*t.cells[0][1] == 0.75);
    CHECK(*t.cells[1][0] == 1.0);
    CHECK(*t.cells[1][1] == 0.25);

    std::ostringstream js;
    write_condition_table_json(js, t);
    auto doc = nlohmann::json::parse(js.str());
    CHECK(doc.dump().find("nyuclass") != std::string::npos);
  }
  SUBCASE("one by one") {
    std::vector<EvalReport> reports{report_for("nyuclass", Provenance::ground_truth, 3)};
    const ConditionTable t = compare_conditions(reports);
    REQUIRE(t.cells.size() == 1);
    REQUIRE(t.cells[0].size() == 1);
    CHECK(*t.cells[0][0] == 0.75);
  }
  SUBCASE("missing cell stays empty") {
    std::vector<EvalReport> reports{report_for("nyuclass", Provenance::ground_truth, 3),
                                    report_for("mpcat40", Provenance::proxy, 1)};
    const ConditionTable t = compare_conditions(reports);
    CHECK_FALSE(t.cells[0][0]);
    std::ostringstream txt;
    write_condition_table_text(txt, t);
    CHECK(txt.str().find("NA") != std::string::npos);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(compare_conditions(std::vector<EvalReport>{}), EvaluationError);
    std::vector<EvalReport> dup{report_for("nyuclass", Provenance::proxy, 1),
                                report_for("nyuclass", Provenance::proxy, 2)};
    CHECK_THROWS_AS(compare_conditions(dup), EvaluationError);
  }
}

TEST_CASE("report writers") {
  const auto preds = hand_built();
  const EvalReport r = evaluate(preds, kLabels);
  std::ostringstream txt, js;
  write_report_text(txt, r);
  write_report_json(js, r, "manifest.json");
  CHECK(txt.str().find("66.67%") != std::string::npos);
  auto doc = nlohmann::json::parse(js.str());
  CHECK(doc["evaluated"] == 6);
  CHECK(doc["manifest"] == "manifest.json");
}
