#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "embryosim/vec3.hpp"
#include "embryosim/volume.hpp"

namespace embryosim {

struct VideoFrame {
  Volume<float> intensity;
  MaskVolume mask;  // 0/1

  friend bool operator==(const VideoFrame&, const VideoFrame&) = default;
};

// One nucleus over a full division cycle, in the video's own voxel grid
// (treated as isotropic). The nucleus is centered on the grid center.
struct ObjectVideo {
  int video_id = 1;
  std::vector<VideoFrame> frames;

  std::size_t frame_count() const { return frames.size(); }
  // Equivalent-sphere radius of the frame-0 mask, in video voxels.
  double nucleus_radius() const;
  // Dominant principal axis of the last frame's mask (unit vector).
  Vec3 final_axis() const;

  friend bool operator==(const ObjectVideo&, const ObjectVideo&) = default;
};

// Throws ValidationError on dimension mismatch, mask outside intensity
// support, empty masks or fewer than two frames.
void validate(const ObjectVideo& video);

struct VideoGeneratorSpec {
  int frames = 12;
  double base_radius = 8.0;  // voxels
  double intensity = 600.0;  // counts at the nucleus center
};

void validate(const VideoGeneratorSpec& spec);

// Procedural dividing nucleus: an ellipsoid that elongates along a random
// axis, then pinches into two separating daughters.
ObjectVideo synthesize_object_video(const VideoGeneratorSpec& spec, std::uint64_t seed,
                                    int video_id = 1);

// Reads `vid<ID>_t<frame>_{int,mask}.nrrd` pairs from a directory; ids are
// renumbered 1..N in ascending order of their file ids.
std::vector<ObjectVideo> load_object_videos(const std::filesystem::path& dir);
void write_object_video(const ObjectVideo& video, const std::filesystem::path& dir);

// Count of 6-connected nonzero components.
int connected_components(const MaskVolume& mask);

}  // namespace embryosim
