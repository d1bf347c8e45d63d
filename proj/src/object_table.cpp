#include "embryosim/object_table.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "embryosim/errors.hpp"
#include "embryosim/text.hpp"

namespace embryosim {

void write_object_table(std::span<const ObjectRecord> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write object table " + path.string());
  out << kObjectTableHeader << '\n';
  using text::format_double;
  for (const auto& r : rows) {
    out << r.frame << ',' << r.id << ',';
    if (r.parent_id) out << *r.parent_id;
    out << ',' << format_double(r.position.x) << ',' << format_double(r.position.y) << ','
        << format_double(r.position.z) << ',' << format_double(r.voxel.x) << ','
        << format_double(r.voxel.y) << ',' << format_double(r.voxel.z) << ','
        << format_double(r.radius) << ',' << r.cycle_state << ',' << r.cycle_length << ','
        << r.video_id << ',' << r.labeled_voxels << ',' << (r.clipped ? 1 : 0) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing object table " + path.string());
}

std::vector<ObjectRecord> read_object_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open object table " + path.string());
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != kObjectTableHeader) {
    throw ParseError(path.string() + ":1: unexpected object table header");
  }
  std::vector<ObjectRecord> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fail = [&](const std::string& what) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    const auto f = text::split(line, ',');
    if (f.size() != 15) fail("expected 15 fields, got " + std::to_string(f.size()));
    ObjectRecord r;
    std::int64_t iv = 0;
    auto int_field = [&](std::size_t i, const char* name) {
      if (!text::parse_int(f[i], iv)) fail(std::string("bad ") + name);
      return iv;
    };
    auto real_field = [&](std::size_t i, const char* name) {
      double v = 0.0;
      if (!text::parse_double(f[i], v)) fail(std::string("bad ") + name);
      return v;
    };
    r.frame = static_cast<int>(int_field(0, "frame"));
    r.id = int_field(1, "id");
    if (!text::trim(f[2]).empty()) r.parent_id = int_field(2, "parent_id");
    r.position = {real_field(3, "x"), real_field(4, "y"), real_field(5, "z")};
    r.voxel = {real_field(6, "vx"), real_field(7, "vy"), real_field(8, "vz")};
    r.radius = real_field(9, "radius");
    r.cycle_state = static_cast<int>(int_field(10, "cycle_state"));
    r.cycle_length = static_cast<int>(int_field(11, "cycle_length"));
    r.video_id = static_cast<int>(int_field(12, "video_id"));
    r.labeled_voxels = int_field(13, "labeled_voxels");
    const auto clipped = int_field(14, "clipped");
    if (clipped != 0 && clipped != 1) fail("clipped must be 0 or 1");
    r.clipped = clipped == 1;
    rows.push_back(r);
  }

  std::set<std::pair<int, std::int64_t>> seen;
  std::map<std::int64_t, int> first_frame;
  for (const auto& r : rows) {
    if (!seen.emplace(r.frame, r.id).second) {
      throw ValidationError(path.string() + ": duplicate (frame, id) = (" +
                            std::to_string(r.frame) + ", " + std::to_string(r.id) + ")");
    }
    auto [it, inserted] = first_frame.emplace(r.id, r.frame);
    if (!inserted) it->second = std::min(it->second, r.frame);
  }
  for (const auto& r : rows) {
    if (!r.parent_id) continue;
    // Ids are issued in birth order, so a parent always has the smaller id.
    const auto parent = first_frame.find(*r.parent_id);
    const bool later_id = *r.parent_id >= r.id;
    const bool later_frame = parent != first_frame.end() && parent->second >= first_frame[r.id];
    if (later_id || later_frame) {
      throw ValidationError(path.string() + ": object " + std::to_string(r.id) +
                            " references parent " + std::to_string(*r.parent_id) +
                            " that was not born before it");
    }
  }
  return rows;
}

std::vector<SimObject> objects_from_records(std::span<const ObjectRecord> rows) {
  std::vector<SimObject> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    SimObject o;
    o.id = r.id;
    o.position = r.position;
    o.radius = r.radius;
    o.cycle_length = r.cycle_length;
    o.cycle_state = r.cycle_state;
    o.video_id = r.video_id;
    o.parent_id = r.parent_id;
    o.birth_frame = r.frame;  // not stored; only the current frame is known
    out.push_back(o);
  }
  std::sort(out.begin(), out.end(), [](const SimObject& a, const SimObject& b) { return a.id < b.id; });
  return out;
}

std::vector<ObjectRecord> records_from_objects(int frame, std::span<const SimObject> objects,
                                               const VolumeSpec& spec) {
  std::vector<ObjectRecord> rows;
  rows.reserve(objects.size());
  for (const auto& o : objects) {
    ObjectRecord r;
    r.frame = frame;
    r.id = o.id;
    r.parent_id = o.parent_id;
    r.position = o.position;
    r.voxel = spec.to_voxel(o.position);
    r.radius = o.radius;
    r.cycle_state = o.cycle_state;
    r.cycle_length = o.cycle_length;
    r.video_id = o.video_id;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace embryosim
