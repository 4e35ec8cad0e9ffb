#include <doctest.h>

#include <fstream>
#include <sstream>

#include "roomlm/errors.hpp"
#include "roomlm/house_convert.hpp"
#include "roomlm/ingest.hpp"
#include "support/graphs.hpp"

using namespace roomlm;
using namespace roomlm::testing;

namespace {

SceneGraph sample(bool with_mapping) {
  std::ifstream in(fixture("sample.house"));
  REQUIRE(in);
  const auto mapping = with_mapping ? load_category_mapping(fixture("category_mapping.tsv"))
                                    : std::map<std::string, std::string>{};
  return convert_house(in, mapping);
}

}  // namespace

TEST_CASE("indoor room label set") {
  const auto labels = indoor_room_labels();
  CHECK(labels.size() == 23);
  CHECK(std::is_sorted(labels.begin(), labels.end()));
  for (const char* outdoor : {"porch", "yard", "balcony", "none"})
    CHECK(std::find(labels.begin(), labels.end(), outdoor) == labels.end());
  CHECK(region_code_labels().at('a') == "bathroom");
  CHECK(region_code_labels().at('t') == "bathroom");
  CHECK(region_code_labels().at('-') == "none");
}

TEST_CASE("regions become rooms") {
  const SceneGraph g = sample(true);
  REQUIRE(g.rooms.size() == 3);
  CHECK(g.rooms[0].id == "demo_r0");
  CHECK(g.rooms[0].gt_label == "bathroom");
  CHECK(g.rooms[1].gt_label == "living room");
  CHECK(g.rooms[2].gt_label == "porch");
  CHECK(g.rooms[1].bbox == box(3, 0, 0, 10, 5, 3));
  CHECK(g.room_space.labels == indoor_room_labels());
  REQUIRE(g.object_spaces.size() == 2);
  CHECK(g.object_spaces[0].name == kCoarseSpaceName);
  CHECK(g.object_spaces[1].name == kFineSpaceName);
}

TEST_CASE("oriented boxes become axis-aligned boxes") {
  const SceneGraph g = sample(true);
  REQUIRE(g.objects.size() == 4);
  CHECK(g.find_object("demo_o0")->bbox == box(1, 1, 0, 2, 2, 1));
  const BoundingBox& rotated = g.find_object("demo_o1")->bbox;
  CHECK(rotated.min.isApprox(Eigen::Vector3d(4, 1.75, 0)));
  CHECK(rotated.max.isApprox(Eigen::Vector3d(6, 2.25, 1)));
  const Eigen::Vector3d half = (rotated.max - rotated.min) / 2;
  CHECK(half.isApprox(Eigen::Vector3d(1, 0.25, 0.5)));
}

TEST_CASE("object labels in both spaces") {
  SUBCASE("with a category mapping") {
    const SceneGraph g = sample(true);
    CHECK(g.find_object("demo_o0")->label(kCoarseSpaceName) == "toilet");
    CHECK(g.find_object("demo_o1")->label(kCoarseSpaceName) == "cabinet");
    CHECK(g.find_object("demo_o1")->label(kFineSpaceName) == "kitchen cabinet");
    CHECK(g.find_object("demo_o2")->label(kCoarseSpaceName) == "appliances");
    CHECK(g.find_object("demo_o2")->label(kFineSpaceName) == "refridgerator");
  }
  SUBCASE("raw category stands in without one") {
    const SceneGraph g = sample(false);
    CHECK(g.find_object("demo_o1")->label(kFineSpaceName) == "kitchen cabinet");
  }
  SUBCASE("missing region and category") {
    const SceneGraph g = sample(true);
    const ObjectNode* o = g.find_object("demo_o3");
    CHECK(o->assigned_room.empty());
    CHECK(o->label(kCoarseSpaceName) == "unlabeled");
    CHECK(o->label(kFineSpaceName) == "unlabeled");
  }
}

TEST_CASE("converted houses survive the scene file format and ingest") {
  const SceneGraph g = sample(true);
  std::ostringstream out;
  write_scene(out, g);
  const SceneGraph back = parse_text(out.str(), {});
  CHECK(back == g);

  IngestConfig cfg;
  cfg.spelling_fixes = load_spelling_fixes(std::string(ROOMLM_DATA_DIR) + "/spelling_fixes.tsv");
  const SceneGraph fine = preprocess(back, cfg, kFineSpaceName);
  // The toilet sits inside the bathroom box even though its record names the living room.
  CHECK(fine.find_object("demo_o0")->assigned_room == "demo_r0");
  CHECK(fine.find_object("demo_o2")->label(kFineSpaceName) == "refrigerator");
  CHECK_FALSE(fine.find_room("demo_r2"));
  CHECK_FALSE(fine.find_object("demo_o3"));
  CHECK(validate(fine).empty());
}

TEST_CASE("merging houses") {
  SceneGraph all;
  merge_graphs(all, sample(true));
  CHECK(all.rooms.size() == 3);
  CHECK_THROWS_AS(merge_graphs(all, sample(true)), SchemaError);
}

TEST_CASE("malformed house files") {
  std::istringstream wrong_version("ASCII 2.0\n");
  CHECK_THROWS_AS(convert_house(wrong_version, {}), ParseError);
  std::istringstream short_object(
      "ASCII 1.1\nH x x 0 0 0 0 0 0 0 0 0 0  0 0 0 0 0  0 0 0 1 1 1  0 0 0 0 0\nO 0 0\n");
  CHECK_THROWS_AS(convert_house(short_object, {}), ParseError);
  CHECK_THROWS_AS(load_category_mapping(fixture("bonus_table.tsv")), SchemaError);
}
