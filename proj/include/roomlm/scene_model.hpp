#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace roomlm {

/// Lowercases, trims, and collapses inner whitespace runs to one space. Every category string is stored in this form.
std::string normalize_label(std::string_view label);

/// A named, ordered set of category strings plus the labels excluded from inference.
struct LabelSpace {
  std::string name;
  std::vector<std::string> labels;
  std::set<std::string> rejected;

  bool contains(std::string_view label) const;
  std::size_t size() const { return labels.size(); }
  /// Position of `label` in `labels`, or size() when absent.
  std::size_t index_of(std::string_view label) const;

  bool operator==(const LabelSpace&) const = default;
};

/// Axis-aligned box in meters.
struct BoundingBox {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  Eigen::Vector3d center() const { return 0.5 * (min + max); }
  bool valid() const { return (min.array() <= max.array()).all(); }
  /// Closed-interval containment on every axis.
  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool operator==(const BoundingBox& o) const { return min == o.min && max == o.max; }
};

struct ObjectNode {
  std::string id;
  std::map<std::string, std::string> label_per_space;
  BoundingBox bbox;
  std::string assigned_room;

  /// Label in `space`, or an empty string when the object has none there.
  const std::string& label(const std::string& space) const;

  bool operator==(const ObjectNode&) const = default;
};

struct RoomNode {
  std::string id;
  std::string gt_label;
  BoundingBox bbox;
  std::vector<std::string> objects;

  bool operator==(const RoomNode&) const = default;
};

/// Rooms and the objects they contain, with the label spaces both are drawn from.
///
/// Object spaces are ordered: index 0 is the coarse (primary) space, index 1,
/// when present, the fine-grained (secondary) one. The graph is treated as
/// immutable once built; pipeline stages return new graphs.
struct SceneGraph {
  LabelSpace room_space;
  std::vector<LabelSpace> object_spaces;
  std::vector<RoomNode> rooms;
  std::vector<ObjectNode> objects;

  const RoomNode* find_room(std::string_view id) const;
  const ObjectNode* find_object(std::string_view id) const;
  const LabelSpace* find_object_space(std::string_view name) const;

  /// Labels (in `space`) of the objects contained in `room`, in containment order.
  std::vector<std::string> object_labels(const RoomNode& room, const std::string& space) const;

  bool operator==(const SceneGraph&) const = default;
};

/// Rebuilds each room's object list from the objects' assigned_room fields,
/// keeping object order.
void rebuild_containment(SceneGraph& graph);

/// Recomputes every object space's label list as the sorted set of labels in use,
/// minus that space's rejected labels.
void refresh_object_spaces(SceneGraph& graph);

/// One entry per broken invariant, each naming the offending node or space.
/// Empty means the graph is well formed.
std::vector<std::string> validate(const SceneGraph& graph);

}  // namespace roomlm
