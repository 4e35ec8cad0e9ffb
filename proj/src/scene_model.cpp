#include "roomlm/scene_model.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

namespace roomlm {

std::string normalize_label(std::string_view label) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : label) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

bool LabelSpace::contains(std::string_view label) const {
  return index_of(label) < labels.size();
}

std::size_t LabelSpace::index_of(std::string_view label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  return static_cast<std::size_t>(it - labels.begin());
}

const std::string& ObjectNode::label(const std::string& space) const {
  static const std::string kEmpty;
  auto it = label_per_space.find(space);
  return it == label_per_space.end() ? kEmpty : it->second;
}

const RoomNode* SceneGraph::find_room(std::string_view id) const {
  for (const auto& r : rooms)
    if (r.id == id) return &r;
  return nullptr;
}

const ObjectNode* SceneGraph::find_object(std::string_view id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

const LabelSpace* SceneGraph::find_object_space(std::string_view name) const {
  for (const auto& s : object_spaces)
    if (s.name == name) return &s;
  return nullptr;
}

std::vector<std::string> SceneGraph::object_labels(const RoomNode& room,
                                                   const std::string& space) const {
  std::unordered_map<std::string_view, const ObjectNode*> by_id;
  for (const auto& o : objects) by_id.emplace(o.id, &o);
  std::vector<std::string> out;
  out.reserve(room.objects.size());
  for (const auto& id : room.objects) {
    auto it = by_id.find(id);
    if (it != by_id.end()) out.push_back(it->second->label(space));
  }
  return out;
}

void rebuild_containment(SceneGraph& graph) {
  std::unordered_map<std::string, RoomNode*> by_id;
  for (auto& r : graph.rooms) {
    r.objects.clear();
    by_id.emplace(r.id, &r);
  }
  for (const auto& o : graph.objects) {
    auto it = by_id.find(o.assigned_room);
    if (it != by_id.end()) it->second->objects.push_back(o.id);
  }
}

void refresh_object_spaces(SceneGraph& graph) {
  for (auto& space : graph.object_spaces) {
    std::set<std::string> in_use;
    for (const auto& o : graph.objects) {
      const auto& l = o.label(space.name);
      if (!l.empty() && !space.rejected.count(l)) in_use.insert(l);
    }
    space.labels.assign(in_use.begin(), in_use.end());
  }
}

namespace {

void check_space(const LabelSpace& space, std::vector<std::string>& out) {
  std::unordered_set<std::string> seen;
  for (const auto& l : space.labels) {
    if (!seen.insert(normalize_label(l)).second)
      out.push_back("label space '" + space.name + "': duplicate label '" + l + "'");
    if (space.rejected.count(l))
      out.push_back("label space '" + space.name + "': rejected label '" + l + "' still listed");
  }
}

}  // namespace

std::vector<std::string> validate(const SceneGraph& graph) {
  std::vector<std::string> out;

  check_space(graph.room_space, out);
  if (graph.room_space.size() < 2)
    out.push_back("label space '" + graph.room_space.name + "': fewer than 2 room labels");
  for (const auto& s : graph.object_spaces) check_space(s, out);

  std::unordered_map<std::string, const RoomNode*> rooms;
  for (const auto& r : graph.rooms) {
    if (!rooms.emplace(r.id, &r).second) out.push_back("room '" + r.id + "': duplicate id");
    if (!r.bbox.valid()) out.push_back("room '" + r.id + "': bbox min exceeds max");
    if (!graph.room_space.contains(r.gt_label))
      out.push_back("room '" + r.id + "': label '" + r.gt_label + "' not in room space");
    if (r.objects.empty()) out.push_back("room '" + r.id + "': no objects");
  }

  std::unordered_map<std::string, const ObjectNode*> objects;
  for (const auto& o : graph.objects) {
    if (!objects.emplace(o.id, &o).second) out.push_back("object '" + o.id + "': duplicate id");
    if (!o.bbox.valid()) out.push_back("object '" + o.id + "': bbox min exceeds max");
    for (const auto& [space_name, label] : o.label_per_space) {
      const LabelSpace* space = graph.find_object_space(space_name);
      if (!space)
        out.push_back("object '" + o.id + "': unknown label space '" + space_name + "'");
      else if (!space->contains(label))
        out.push_back("object '" + o.id + "': label '" + label + "' not in space '" +
                      space_name + "'");
    }
    auto it = rooms.find(o.assigned_room);
    if (it == rooms.end()) {
      out.push_back("object '" + o.id + "': assigned to missing room '" + o.assigned_room + "'");
    } else {
      const auto& listed = it->second->objects;
      if (std::count(listed.begin(), listed.end(), o.id) != 1)
        out.push_back("object '" + o.id + "': not listed exactly once by room '" +
                      o.assigned_room + "'");
    }
  }

  for (const auto& r : graph.rooms) {
    for (const auto& oid : r.objects) {
      auto it = objects.find(oid);
      if (it == objects.end())
        out.push_back("room '" + r.id + "': lists missing object '" + oid + "'");
      else if (it->second->assigned_room != r.id)
        out.push_back("room '" + r.id + "': lists object '" + oid + "' assigned elsewhere");
    }
  }
  return out;
}

}  // namespace roomlm
