#include "roomlm/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "roomlm/errors.hpp"
#include "text_util.hpp"

namespace roomlm {

namespace {

constexpr std::string_view kMagic = "roomlm-scene";
constexpr std::string_view kVersion = "1";

BoundingBox parse_bbox(const std::vector<std::string_view>& f, std::size_t at, std::size_t line) {
  BoundingBox box;
  for (int i = 0; i < 3; ++i) {
    if (!detail::parse_double(f[at + i], box.min[i]) ||
        !detail::parse_double(f[at + 3 + i], box.max[i]))
      throw ParseError("bad bbox coordinate", line);
  }
  if (!box.valid()) throw ParseError("bbox min exceeds max", line);
  return box;
}

void write_bbox(std::ostream& out, const BoundingBox& b) {
  for (int i = 0; i < 3; ++i) out << '\t' << detail::format_shortest(b.min[i]);
  for (int i = 0; i < 3; ++i) out << '\t' << detail::format_shortest(b.max[i]);
}

}  // namespace

SceneGraph parse_scene(std::istream& in, const IngestConfig& config) {
  SceneGraph g;
  g.room_space.name = "room";
  bool saw_magic = false;
  bool declared_rooms = false;
  std::unordered_set<std::string> room_ids, object_ids;
  std::set<std::string> observed_room_labels;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = detail::strip_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    auto f = detail::split(line, '\t');
    const auto kind = f[0];

    if (!saw_magic) {
      if (kind != kMagic || f.size() != 2)
        throw ParseError("expected header 'roomlm-scene<TAB>1'", line_no);
      if (f[1] != kVersion) throw ParseError("unsupported scene version '" + std::string(f[1]) + "'", line_no);
      saw_magic = true;
      continue;
    }

    if (kind == "spaces") {
      if (!g.object_spaces.empty()) throw ParseError("label spaces declared twice", line_no);
      if (f.size() < 2) throw ParseError("'spaces' needs at least one label-space name", line_no);
      for (std::size_t i = 1; i < f.size(); ++i) {
        std::string name(f[i]);
        if (name.empty()) throw ParseError("empty label-space name", line_no);
        if (g.find_object_space(name)) throw ParseError("duplicate label space '" + name + "'", line_no);
        g.object_spaces.push_back(LabelSpace{name, {}, {}});
      }
    } else if (kind == "rooms") {
      if (declared_rooms) throw ParseError("room labels declared twice", line_no);
      if (!g.rooms.empty()) throw SchemaError("line " + std::to_string(line_no) + ": 'rooms' must precede room records");
      declared_rooms = true;
      for (std::size_t i = 1; i < f.size(); ++i) {
        auto label = normalize_label(f[i]);
        if (label.empty()) throw ParseError("empty room label", line_no);
        if (g.room_space.contains(label)) throw ParseError("duplicate room label '" + label + "'", line_no);
        g.room_space.labels.push_back(label);
      }
    } else if (kind == "room") {
      if (f.size() != 9) throw ParseError("room record needs 9 fields, got " + std::to_string(f.size()), line_no);
      RoomNode r;
      r.id = std::string(f[1]);
      if (r.id.empty()) throw ParseError("empty room id", line_no);
      if (!room_ids.insert(r.id).second) throw ParseError("duplicate room id '" + r.id + "'", line_no);
      r.gt_label = normalize_label(f[2]);
      if (declared_rooms && !g.room_space.contains(r.gt_label) &&
          !config.outdoor_room_labels.count(r.gt_label) && !config.removed_room_labels.count(r.gt_label))
        throw SchemaError("line " + std::to_string(line_no) + ": room '" + r.id +
                          "' has undeclared label '" + r.gt_label + "'");
      r.bbox = parse_bbox(f, 3, line_no);
      observed_room_labels.insert(r.gt_label);
      g.rooms.push_back(std::move(r));
    } else if (kind == "object") {
      if (g.object_spaces.empty())
        throw SchemaError("line " + std::to_string(line_no) + ": object record before 'spaces' declaration");
      const std::size_t n_spaces = g.object_spaces.size();
      if (f.size() != 3 + n_spaces + 6)
        throw SchemaError("line " + std::to_string(line_no) + ": object record carries " +
                          std::to_string(static_cast<long>(f.size()) - 9) + " labels for " +
                          std::to_string(n_spaces) + " declared label spaces");
      ObjectNode o;
      o.id = std::string(f[1]);
      if (o.id.empty()) throw ParseError("empty object id", line_no);
      if (!object_ids.insert(o.id).second) throw ParseError("duplicate object id '" + o.id + "'", line_no);
      o.assigned_room = std::string(f[2]);
      for (std::size_t i = 0; i < n_spaces; ++i) {
        auto label = normalize_label(f[3 + i]);
        if (label.empty()) throw ParseError("empty object label", line_no);
        o.label_per_space[g.object_spaces[i].name] = std::move(label);
      }
      o.bbox = parse_bbox(f, 3 + n_spaces, line_no);
      g.objects.push_back(std::move(o));
    } else {
      throw ParseError("unknown record kind '" + std::string(kind) + "'", line_no);
    }
  }

  if (!declared_rooms) {
    for (const auto& l : observed_room_labels)
      if (!config.outdoor_room_labels.count(l) && !config.removed_room_labels.count(l))
        g.room_space.labels.push_back(l);
  }
  refresh_object_spaces(g);
  rebuild_containment(g);
  return g;
}

SceneGraph parse_scene_file(const std::filesystem::path& path, const IngestConfig& config) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene file '" + path.string() + "'");
  try {
    return parse_scene(in, config);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_scene(std::ostream& out, const SceneGraph& g) {
  out << kMagic << '\t' << kVersion << '\n';
  if (!g.object_spaces.empty()) {
    out << "spaces";
    for (const auto& s : g.object_spaces) out << '\t' << s.name;
    out << '\n';
  }
  out << "rooms";
  for (const auto& l : g.room_space.labels) out << '\t' << l;
  out << '\n';
  for (const auto& r : g.rooms) {
    out << "room\t" << r.id << '\t' << r.gt_label;
    write_bbox(out, r.bbox);
    out << '\n';
  }
  for (const auto& o : g.objects) {
    out << "object\t" << o.id << '\t' << o.assigned_room;
    for (const auto& s : g.object_spaces) out << '\t' << o.label(s.name);
    write_bbox(out, o.bbox);
    out << '\n';
  }
}

void write_scene_file(const std::filesystem::path& path, const SceneGraph& graph) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_scene(out, graph);
}

std::map<std::string, std::string> load_spelling_fixes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open spelling-fix file '" + path.string() + "'");
  std::map<std::string, std::string> fixes;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = detail::strip_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    auto f = detail::split(line, '\t');
    if (f.size() != 2) throw ParseError(path.string() + ": spelling fix needs 2 columns", line_no);
    auto from = normalize_label(f[0]);
    auto to = normalize_label(f[1]);
    if (from.empty() || to.empty()) throw ParseError(path.string() + ": empty spelling-fix entry", line_no);
    if (!fixes.emplace(from, to).second)
      throw ParseError(path.string() + ": duplicate spelling fix for '" + from + "'", line_no);
  }
  for (const auto& [from, to] : fixes)
    if (fixes.count(to))
      throw ParseError(path.string() + ": fix target '" + to + "' is itself misspelled");
  return fixes;
}

SceneGraph reassign_objects_by_bbox(SceneGraph graph) {
  std::vector<const RoomNode*> by_id;
  for (const auto& r : graph.rooms) by_id.push_back(&r);
  std::sort(by_id.begin(), by_id.end(),
            [](const RoomNode* a, const RoomNode* b) { return a->id < b->id; });

  bool moved = false;
  for (auto& o : graph.objects) {
    const Eigen::Vector3d c = o.bbox.center();
    const RoomNode* current = graph.find_room(o.assigned_room);
    if (current && current->bbox.contains(c)) continue;
    for (const RoomNode* r : by_id) {
      if (r->bbox.contains(c)) {
        o.assigned_room = r->id;
        moved = true;
        break;
      }
    }
  }
  if (moved) rebuild_containment(graph);
  return graph;
}

SceneGraph apply_spelling_fixes(SceneGraph graph, const std::map<std::string, std::string>& fixes) {
  if (fixes.empty()) return graph;
  for (auto& o : graph.objects)
    for (auto& [space, label] : o.label_per_space) {
      auto it = fixes.find(label);
      if (it != fixes.end()) label = it->second;
    }
  refresh_object_spaces(graph);
  return graph;
}

SceneGraph resolve_label_space_conflicts(SceneGraph graph, const std::string& primary_space,
                                         const std::string& secondary_space,
                                         const std::set<std::string>& rejected_primary) {
  if (!graph.find_object_space(primary_space))
    throw SchemaError("unknown label space '" + primary_space + "'");
  if (!graph.find_object_space(secondary_space))
    throw SchemaError("unknown label space '" + secondary_space + "'");

  // Primary labels seen with each secondary label, in order of first appearance.
  std::unordered_map<std::string, std::vector<std::string>> seen_with;
  for (const auto& o : graph.objects) {
    auto& list = seen_with[o.label(secondary_space)];
    const auto& p = o.label(primary_space);
    if (std::find(list.begin(), list.end(), p) == list.end()) list.push_back(p);
  }

  std::unordered_map<std::string, std::string> chosen;
  for (const auto& [secondary, primaries] : seen_with) {
    if (primaries.size() < 2) continue;
    auto keep = std::find_if(primaries.begin(), primaries.end(),
                             [&](const std::string& p) { return !rejected_primary.count(p); });
    chosen[secondary] = keep == primaries.end() ? primaries.front() : *keep;
  }
  for (auto& o : graph.objects) {
    auto it = chosen.find(o.label(secondary_space));
    if (it != chosen.end()) o.label_per_space[primary_space] = it->second;
  }

  for (auto& s : graph.object_spaces)
    if (s.name == secondary_space) s.rejected.insert(rejected_primary.begin(), rejected_primary.end());
  refresh_object_spaces(graph);
  return graph;
}

SceneGraph filter_graph(SceneGraph graph, const IngestConfig& config, const std::string& object_space) {
  if (!graph.find_object_space(object_space))
    throw SchemaError("unknown label space '" + object_space + "'");
  const std::string coarse = graph.object_spaces.front().name;
  const bool fine_run = object_space != coarse;
  const bool keep_generic = fine_run && config.keep_object_category_for_secondary_space;

  std::set<std::string> coarse_rejected = config.rejected_object_labels;
  if (keep_generic) coarse_rejected.erase(kGenericObjectCategory);
  for (auto& s : graph.object_spaces) {
    if (s.name == coarse)
      s.rejected = coarse_rejected;
    else if (s.name == object_space)
      s.rejected.insert(config.rejected_object_labels.begin(), config.rejected_object_labels.end());
    else
      s.rejected.clear();  // unused in this run
  }

  std::set<std::string> dropped_room_labels = config.outdoor_room_labels;
  dropped_room_labels.insert(config.removed_room_labels.begin(), config.removed_room_labels.end());

  std::erase_if(graph.rooms, [&](const RoomNode& r) { return dropped_room_labels.count(r.gt_label) > 0; });
  std::unordered_set<std::string> live_rooms;
  for (const auto& r : graph.rooms) live_rooms.insert(r.id);

  const LabelSpace* selected = graph.find_object_space(object_space);
  std::erase_if(graph.objects, [&](const ObjectNode& o) {
    if (!live_rooms.count(o.assigned_room)) return true;
    if (coarse_rejected.count(o.label(coarse))) return true;
    return selected->rejected.count(o.label(object_space)) > 0;
  });

  rebuild_containment(graph);
  std::erase_if(graph.rooms, [](const RoomNode& r) { return r.objects.empty(); });

  auto& rs = graph.room_space;
  std::erase_if(rs.labels, [&](const std::string& l) { return dropped_room_labels.count(l) > 0; });
  rs.rejected = dropped_room_labels;
  refresh_object_spaces(graph);
  return graph;
}

SceneGraph preprocess(SceneGraph raw, const IngestConfig& config, const std::string& object_space) {
  if (!raw.find_object_space(object_space))
    throw SchemaError("unknown label space '" + object_space + "'");
  SceneGraph g = reassign_objects_by_bbox(std::move(raw));
  g = apply_spelling_fixes(std::move(g), config.spelling_fixes);
  if (g.object_spaces.size() >= 2)
    g = resolve_label_space_conflicts(std::move(g), g.object_spaces[0].name, g.object_spaces[1].name,
                                      config.rejected_object_labels);
  return filter_graph(std::move(g), config, object_space);
}

std::vector<std::pair<std::string, std::size_t>> room_label_histogram(const SceneGraph& graph) {
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const auto& l : graph.room_space.labels) {
    auto n = std::count_if(graph.rooms.begin(), graph.rooms.end(),
                           [&](const RoomNode& r) { return r.gt_label == l; });
    out.emplace_back(l, static_cast<std::size_t>(n));
  }
  return out;
}

}  // namespace roomlm
