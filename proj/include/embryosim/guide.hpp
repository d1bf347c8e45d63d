#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "embryosim/vec3.hpp"

namespace embryosim {

struct GuideCell {
  std::int64_t id = 0;
  Vec3 position;
  // Motion to the next frame, x(k+1) - x(k). Zero on the last frame.
  Vec3 displacement;

  friend bool operator==(const GuideCell&, const GuideCell&) = default;
};

struct GuideFrame {
  int frame_index = 0;
  std::vector<GuideCell> cells;

  friend bool operator==(const GuideFrame&, const GuideFrame&) = default;
};

struct GuideSequence {
  std::vector<GuideFrame> frames;
  Box bounds;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t cell_count(std::size_t frame) const { return frames.at(frame).cells.size(); }

  friend bool operator==(const GuideSequence&, const GuideSequence&) = default;
};

// Tight box over every cell position, grown by `padding` on each side.
Box guide_bounds(const std::vector<GuideFrame>& frames, double padding);

// Checks consecutive frame indices, non-empty frames, unique ids per frame and
// finite coordinates. Throws ValidationError.
void validate_guide_frames(const std::vector<GuideFrame>& frames);

// Reads the `frame,id,x,y,z,dx,dy,dz` CSV. `padding` is r_max.
GuideSequence load_guide(const std::filesystem::path& path, double padding);
void write_guide(const GuideSequence& guide, const std::filesystem::path& path);

struct GuideGeneratorSpec {
  int frames = 40;
  int initial_cells = 100;
  double growth = 1.0;           // per-frame multiplicative growth of the cell count
  double shell_radius = 110.0;   // µm
  double shell_thickness = 30.0;  // µm, radial extent of the sheet
  double start_angle_deg = 40.0;  // polar extent of the cap at frame 0
  double end_angle_deg = 70.0;    // polar extent at the last frame
  double jitter = 0.5;            // µm, per-frame random-walk step scale
};

void validate(const GuideGeneratorSpec& spec);

// Cell count of frame k as produced by synthesize_guide.
int generated_cell_count(const GuideGeneratorSpec& spec, int frame);

// Expanding spherical-cap sheet of cells. Coordinates are snapped to a dyadic
// grid so that position + displacement reproduces the next position exactly.
GuideSequence synthesize_guide(const GuideGeneratorSpec& spec, std::uint64_t seed,
                               double padding);

}  // namespace embryosim
