#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "roomlm/scene_model.hpp"

namespace roomlm {

inline constexpr const char* kCoarseSpaceName = "mpcat40";
inline constexpr const char* kFineSpaceName = "nyuclass";

/// Matterport region code → room label. Outdoor codes map to yard/balcony/porch and
/// unusable codes to "none" so that ingest filtering removes them.
const std::map<char, std::string>& region_code_labels();

/// The 23 indoor room labels produced by region_code_labels(), sorted.
std::vector<std::string> indoor_room_labels();

/// Raw Matterport category name → nyuClass label, read from category_mapping.tsv
/// (tab-separated, header row naming `raw_category` and `nyuClass` columns).
std::map<std::string, std::string> load_category_mapping(const std::filesystem::path& path);

/// Converts one `.house` file (ASCII 1.1) to a raw scene graph with spaces
/// {mpcat40, nyuclass}. Room and object ids are prefixed with the house name.
/// Without a mapping the raw category name stands in for the nyuClass label.
SceneGraph convert_house(std::istream& in, const std::map<std::string, std::string>& category_mapping);

/// Appends `part` to `into`. Ids must not collide.
void merge_graphs(SceneGraph& into, const SceneGraph& part);

}  // namespace roomlm
