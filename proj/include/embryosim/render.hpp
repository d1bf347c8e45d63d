#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "embryosim/dynamics.hpp"
#include "embryosim/object_video.hpp"
#include "embryosim/volume.hpp"

namespace embryosim {

// Output grid. `origin` is the world position (µm) of voxel (0, 0, 0)'s center.
struct VolumeSpec {
  Dims dims;
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin;

  Vec3 to_voxel(const Vec3& world) const {
    return {(world.x - origin.x) / spacing.x, (world.y - origin.y) / spacing.y,
            (world.z - origin.z) / spacing.z};
  }
};

// Ground-truth row for one object in one frame.
struct ObjectRecord {
  int frame = 0;
  std::int64_t id = 0;
  std::optional<std::int64_t> parent_id;
  Vec3 position;  // µm
  Vec3 voxel;     // voxel coordinates
  double radius = 0.0;
  int cycle_state = 1;
  int cycle_length = 1;
  int video_id = 1;
  std::int64_t labeled_voxels = 0;
  bool clipped = false;  // nucleus footprint not fully inside the volume

  friend bool operator==(const ObjectRecord&, const ObjectRecord&) = default;
};

// Object-video library with per-video quantities cached for rendering.
class VideoLibrary {
 public:
  explicit VideoLibrary(std::vector<ObjectVideo> videos);

  std::size_t size() const { return videos_.size(); }
  const ObjectVideo& video(int video_id) const;
  double nucleus_radius(int video_id) const;
  // Mask bounding box of one frame, as offsets (voxels) from the grid center.
  const Box& mask_extent(int video_id, int frame) const;
  std::vector<Vec3> final_axes() const;

 private:
  std::vector<ObjectVideo> videos_;
  std::vector<double> radii_;
  std::vector<std::vector<Box>> extents_;
};

// round((s - 1) / (l - 1) * (F - 1)); a one-frame cycle maps to the last frame.
int video_frame_for(int cycle_state, int cycle_length, int video_frames);

struct RenderedFrame {
  RealVolume raw;
  LabelVolume label;
  std::vector<ObjectRecord> records;  // ascending by id
};

// Rasterizes every object of `objects` (ascending ids) into raw and label
// volumes. Raw composites by voxelwise maximum; a labeled voxel belongs to the
// object with the larger interpolated intensity there, ties to the lower id.
RenderedFrame rasterize_frame(int frame, std::span<const SimObject> objects,
                              const VideoLibrary& library, const VolumeSpec& spec);

inline RenderedFrame rasterize_frame(const PopulationState& state, const VideoLibrary& library,
                                     const VolumeSpec& spec) {
  return rasterize_frame(state.frame_index, state.objects, library, spec);
}

}  // namespace embryosim
