#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "embryosim/acquisition.hpp"
#include "embryosim/dynamics.hpp"
#include "embryosim/guide.hpp"
#include "embryosim/object_video.hpp"
#include "embryosim/render.hpp"

namespace embryosim {

struct GuideFile {
  std::filesystem::path path;
};
using GuideSource = std::variant<GuideFile, GuideGeneratorSpec>;

struct VideoDirectory {
  std::filesystem::path path;
};
struct VideoGenerator {
  int count = 8;
  VideoGeneratorSpec spec;
};
using VideoSource = std::variant<VideoDirectory, VideoGenerator>;

struct PsfFile {
  std::filesystem::path path;
};
struct GaussianPsf {
  double sigma_xy = 1.5;  // voxels
  double sigma_z = 4.0;
};
using PsfSource = std::variant<PsfFile, GaussianPsf>;

struct VolumeSettings {
  std::optional<Dims> dims;     // default: cover the guide bounds
  Vec3 spacing{1.0, 1.0, 1.0};  // µm per voxel
  std::optional<Vec3> origin;   // default: guide bounds low corner
};

struct AcquisitionSettings {
  PsfSource psf = GaussianPsf{};
  double dark_offset = 100.0;
  std::optional<std::filesystem::path> dark_image;
  double sigma_agn = 5.0;
  bool shot_noise = true;
  Attenuation attenuation = Attenuation::forward;
  bool multiview = false;
  int bits = 16;
};

struct FrameRange {
  int first = 0;
  int last = 0;  // inclusive
  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

struct SimulationConfig {
  std::uint64_t seed = 0;
  GuideSource guide = GuideGeneratorSpec{};
  InitialPopulation population = InitialFraction{0.5};
  DynamicsConfig dynamics;  // seed and video_count are filled in at run time
  DivisionModel division;
  VolumeSettings volume;
  AcquisitionSettings acquisition;
  VideoSource videos = VideoGenerator{};
  std::optional<FrameRange> frames;
  std::optional<std::filesystem::path> output;
  // Relative paths in the document resolve against this directory.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : base_dir / p;
  }
};

// Dotted-path override such as `dynamics.K=5`. The value is taken as JSON when
// it parses as JSON and as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Validates and fills defaults. Unknown keys are rejected. Throws
// ValidationError naming the offending key or constraint.
SimulationConfig config_from_json(const nlohmann::json& doc,
                                  const std::filesystem::path& base_dir = {});
SimulationConfig parse_config(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides = {});

// Fully materialized document (every default written out).
nlohmann::json config_to_json(const SimulationConfig& cfg);

FrameRange parse_frame_range(const std::string& text);

}  // namespace embryosim
