#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>

#include "roomlm/scene_model.hpp"

namespace roomlm {

/// Coarse category whose objects stay in the fine-grained run.
inline constexpr const char* kGenericObjectCategory = "object";

struct IngestConfig {
  std::set<std::string> outdoor_room_labels{"yard", "balcony", "porch"};
  std::set<std::string> removed_room_labels{"none"};
  std::set<std::string> rejected_object_labels{"ceiling", "wall",   "floor",
                                               "miscellaneous", "object", "unlabeled"};
  std::map<std::string, std::string> spelling_fixes;
  bool keep_object_category_for_secondary_space = true;
};

// Scene file I/O. The record layout is documented in docs/formats.md.

/// Parses a scene file. No filtering happens here: outdoor rooms, rejected labels and
/// orphan objects all survive into the raw graph.
SceneGraph parse_scene(std::istream& in, const IngestConfig& config);
SceneGraph parse_scene_file(const std::filesystem::path& path, const IngestConfig& config);

void write_scene(std::ostream& out, const SceneGraph& graph);
void write_scene_file(const std::filesystem::path& path, const SceneGraph& graph);

/// Two-column tab-separated map, `#` comments. Keys and values are normalized;
/// a value that is also a key is rejected so that fixes apply in a single pass.
std::map<std::string, std::string> load_spelling_fixes(const std::filesystem::path& path);

// Preprocessing stages, in pipeline order.

/// Moves every object whose bbox center lies outside its assigned room's bbox into the
/// room (lowest id first) whose bbox contains that center. Objects no room contains
/// keep their assignment.
SceneGraph reassign_objects_by_bbox(SceneGraph graph);

SceneGraph apply_spelling_fixes(SceneGraph graph, const std::map<std::string, std::string>& fixes);

/// For every secondary label seen with several primary labels, rewrites the primary
/// label to the first non-rejected one (first by object order). Secondary labels equal
/// to a rejected primary label join the secondary space's rejected set.
SceneGraph resolve_label_space_conflicts(SceneGraph graph, const std::string& primary_space,
                                         const std::string& secondary_space,
                                         const std::set<std::string>& rejected_primary);

/// Drops outdoor and "none" rooms, rejected objects, orphan objects, and rooms left
/// empty. `object_space` selects the run; in the fine-grained run coarse "object"
/// nodes are kept.
SceneGraph filter_graph(SceneGraph graph, const IngestConfig& config,
                        const std::string& object_space);

/// parse → reassign → spelling fixes → conflict resolution → filtering.
SceneGraph preprocess(SceneGraph raw, const IngestConfig& config, const std::string& object_space);

/// Room count per label, in room-space order.
std::vector<std::pair<std::string, std::size_t>> room_label_histogram(const SceneGraph& graph);

}  // namespace roomlm
