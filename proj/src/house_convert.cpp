#include "roomlm/house_convert.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Geometry>

#include "roomlm/errors.hpp"
#include "text_util.hpp"

namespace roomlm {

const std::map<char, std::string>& region_code_labels() {
  static const std::map<char, std::string> kLabels = {
      {'a', "bathroom"},       {'b', "bedroom"},      {'c', "closet"},
      {'d', "dining room"},    {'e', "lobby"},        {'f', "family room"},
      {'g', "garage"},         {'h', "hallway"},      {'i', "library"},
      {'j', "laundry room"},   {'k', "kitchen"},      {'l', "living room"},
      {'m', "conference auditorium"}, {'n', "lounge"}, {'o', "office"},
      {'p', "porch"},          {'r', "game room"},    {'s', "staircase"},
      {'t', "bathroom"},       {'u', "utility room"}, {'v', "television room"},
      {'w', "gym"},            {'x', "yard"},         {'y', "balcony"},
      {'z', "none"},           {'B', "bar"},          {'C', "classroom"},
      {'D', "dining room"},    {'S', "spa"},          {'Z', "none"},
      {'-', "none"},
  };
  return kLabels;
}

std::vector<std::string> indoor_room_labels() {
  std::set<std::string> out;
  for (const auto& [code, label] : region_code_labels())
    if (label != "none" && label != "porch" && label != "yard" && label != "balcony") out.insert(label);
  return {out.begin(), out.end()};
}

std::map<std::string, std::string> load_category_mapping(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open category mapping '" + path.string() + "'");
  std::string raw;
  if (!std::getline(in, raw)) return {};
  auto header = detail::split(detail::strip_cr(raw), '\t');
  std::size_t raw_col = header.size(), nyu_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "raw_category") raw_col = i;
    if (header[i] == "nyuClass") nyu_col = i;
  }
  if (raw_col == header.size() || nyu_col == header.size())
    throw SchemaError(path.string() + ": header lacks raw_category/nyuClass columns");

  std::map<std::string, std::string> out;
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    auto f = detail::split(detail::strip_cr(raw), '\t');
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() <= std::max(raw_col, nyu_col)) throw ParseError(path.string() + ": short row", line_no);
    auto nyu = normalize_label(f[nyu_col]);
    out[normalize_label(f[raw_col])] = nyu.empty() ? "unlabeled" : nyu;
  }
  return out;
}

namespace {

struct Category {
  std::string raw;
  std::string mpcat40;
};

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  for (std::string t; ss >> t;) out.push_back(t);
  return out;
}

double number(const std::vector<std::string>& t, std::size_t i, std::size_t line) {
  double v = 0;
  if (i >= t.size() || !detail::parse_double(t[i], v)) throw ParseError("bad numeric field", line);
  return v;
}

long long integer(const std::vector<std::string>& t, std::size_t i, std::size_t line) {
  long long v = 0;
  if (i >= t.size() || !detail::parse_int(t[i], v)) throw ParseError("bad integer field", line);
  return v;
}

Eigen::Vector3d vec3(const std::vector<std::string>& t, std::size_t i, std::size_t line) {
  return {number(t, i, line), number(t, i + 1, line), number(t, i + 2, line)};
}

}  // namespace

SceneGraph convert_house(std::istream& in, const std::map<std::string, std::string>& category_mapping) {
  std::string line;
  if (!std::getline(in, line) || detail::strip_cr(line) != "ASCII 1.1")
    throw ParseError("unsupported .house header (expected 'ASCII 1.1')", 1);

  SceneGraph g;
  g.room_space.name = "room";
  g.room_space.labels = indoor_room_labels();
  g.object_spaces = {LabelSpace{kCoarseSpaceName, {}, {}}, LabelSpace{kFineSpaceName, {}, {}}};

  std::string house = "house";
  std::unordered_map<long long, Category> categories;
  std::unordered_map<long long, std::string> region_ids;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = tokenize(line);
    if (t.empty()) continue;
    switch (t[0][0]) {
      case 'H':
        // H name label #images ... xlo ylo zlo xhi yhi zhi ...
        if (t.size() > 1) house = t[1];
        break;
      case 'R': {
        // R region_index level_index 0 0 label  px py pz  xlo ylo zlo xhi yhi zhi height ...
        auto idx = integer(t, 1, line_no);
        if (t.size() < 15) throw ParseError("short region record", line_no);
        auto code = region_code_labels().find(t[5].empty() ? '-' : t[5][0]);
        RoomNode r;
        r.id = house + "_r" + std::to_string(idx);
        r.gt_label = code == region_code_labels().end() ? "none" : code->second;
        r.bbox.min = vec3(t, 9, line_no);
        r.bbox.max = vec3(t, 12, line_no);
        region_ids[idx] = r.id;
        g.rooms.push_back(std::move(r));
        break;
      }
      case 'C': {
        // C category_index category_mapping_index category_mapping_name mpcat40_index mpcat40_name ...
        if (t.size() < 6) throw ParseError("short category record", line_no);
        std::string raw = t[3];
        std::replace(raw.begin(), raw.end(), '#', ' ');
        std::string mp = t[5];
        std::replace(mp.begin(), mp.end(), '#', ' ');
        categories[integer(t, 1, line_no)] = {normalize_label(raw), normalize_label(mp)};
        break;
      }
      case 'O': {
        // O object_index region_index category_index px py pz  a0x a0y a0z  a1x a1y a1z  r0 r1 r2 ...
        if (t.size() < 19) throw ParseError("short object record", line_no);
        auto idx = integer(t, 1, line_no);
        auto region = integer(t, 2, line_no);
        auto cat = integer(t, 3, line_no);
        const Eigen::Vector3d center = vec3(t, 4, line_no);
        const Eigen::Vector3d a0 = vec3(t, 7, line_no);
        const Eigen::Vector3d a1 = vec3(t, 10, line_no);
        const Eigen::Vector3d radius = vec3(t, 13, line_no);
        const Eigen::Vector3d a2 = a0.cross(a1);
        const Eigen::Vector3d half = a0.cwiseAbs() * radius[0] + a1.cwiseAbs() * radius[1] +
                                     a2.cwiseAbs() * radius[2];

        ObjectNode o;
        o.id = house + "_o" + std::to_string(idx);
        auto rid = region_ids.find(region);
        o.assigned_room = rid == region_ids.end() ? "" : rid->second;
        std::string coarse = "unlabeled", fine = "unlabeled";
        if (auto c = categories.find(cat); c != categories.end()) {
          if (!c->second.mpcat40.empty()) coarse = c->second.mpcat40;
          if (category_mapping.empty()) {
            if (!c->second.raw.empty()) fine = c->second.raw;
          } else if (auto m = category_mapping.find(c->second.raw); m != category_mapping.end()) {
            fine = m->second;
          }
        }
        o.label_per_space[kCoarseSpaceName] = coarse;
        o.label_per_space[kFineSpaceName] = fine;
        o.bbox.min = center - half;
        o.bbox.max = center + half;
        g.objects.push_back(std::move(o));
        break;
      }
      default:
        break;
    }
  }
  refresh_object_spaces(g);
  rebuild_containment(g);
  return g;
}

void merge_graphs(SceneGraph& into, const SceneGraph& part) {
  if (into.object_spaces.empty()) {
    into.room_space = part.room_space;
    into.object_spaces = part.object_spaces;
  }
  std::unordered_set<std::string> ids;
  for (const auto& r : into.rooms) ids.insert(r.id);
  for (const auto& o : into.objects) ids.insert(o.id);
  for (const auto& r : part.rooms)
    if (!ids.insert(r.id).second) throw SchemaError("duplicate id '" + r.id + "' across houses");
  for (const auto& o : part.objects)
    if (!ids.insert(o.id).second) throw SchemaError("duplicate id '" + o.id + "' across houses");
  into.rooms.insert(into.rooms.end(), part.rooms.begin(), part.rooms.end());
  into.objects.insert(into.objects.end(), part.objects.begin(), part.objects.end());
  refresh_object_spaces(into);
}

}  // namespace roomlm
