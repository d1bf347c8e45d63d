#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "embryosim/render.hpp"

namespace embryosim {

inline constexpr const char* kObjectTableHeader =
    "frame,id,parent_id,x,y,z,vx,vy,vz,radius,cycle_state,cycle_length,video_id,labeled_voxels,"
    "clipped";

// Real-valued columns are written in shortest round-trip form, so reading a
// table back reproduces every double exactly.
void write_object_table(std::span<const ObjectRecord> rows, const std::filesystem::path& path);

// Validates (frame, id) uniqueness and that every parent was born before its
// child. Throws ParseError / ValidationError.
std::vector<ObjectRecord> read_object_table(const std::filesystem::path& path);

// Rebuilds simulation objects from one frame's rows.
std::vector<SimObject> objects_from_records(std::span<const ObjectRecord> rows);
std::vector<ObjectRecord> records_from_objects(int frame, std::span<const SimObject> objects,
                                               const VolumeSpec& spec);

}  // namespace embryosim
