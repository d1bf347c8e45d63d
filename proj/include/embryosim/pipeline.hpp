#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "embryosim/acquisition.hpp"
#include "embryosim/config.hpp"
#include "embryosim/dynamics.hpp"
#include "embryosim/render.hpp"
#include "embryosim/run_log.hpp"

namespace embryosim {

// Error raised by a pipeline stage; the message names the stage and, where
// relevant, the frame.
class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  int threads = 1;
  std::optional<FrameRange> frames;  // overrides the config's range
  std::ostream* progress = nullptr;
};

// Everything a stage needs that is derived from the config rather than from
// earlier stage outputs.
struct ResolvedInputs {
  GuideSequence guide;
  VideoLibrary videos;
  VolumeSpec volume;
  DynamicsConfig dynamics;  // seed and video count filled in
  FrameRange frames;
};

ResolvedInputs resolve_inputs(const SimulationConfig& cfg,
                              const std::optional<FrameRange>& frames = std::nullopt);
AcquisitionConfig resolve_acquisition(const SimulationConfig& cfg, const VolumeSpec& volume);
std::vector<ObjectVideo> build_video_library(const SimulationConfig& cfg);
GuideSequence build_guide(const SimulationConfig& cfg);

struct SimulationResult {
  std::vector<PopulationState> states;  // frames 0..last
  RunLog log;
};

// Runs the object simulation from frame 0 through `last_frame`.
SimulationResult simulate(const SimulationConfig& cfg, const ResolvedInputs& inputs,
                          int last_frame, int threads = 1, std::ostream* progress = nullptr);

// Output naming, e.g. frame_file("raw", 3, ".nrrd") == "raw_t0003.nrrd".
std::string frame_file(const std::string& prefix, int frame, const std::string& extension);
inline constexpr const char* kRunLogName = "run.log";

// One subcommand each. Every stage finishes by rewriting the manifest.
void run_simulate(const SimulationConfig& cfg, const std::filesystem::path& dir,
                  const RunOptions& options);
void run_render(const SimulationConfig& cfg, const std::filesystem::path& dir,
                const RunOptions& options);
void run_acquire(const SimulationConfig& cfg, const std::filesystem::path& dir,
                 const RunOptions& options);
void run_full(const SimulationConfig& cfg, const std::filesystem::path& dir,
              const RunOptions& options);
void run_make_guide(const SimulationConfig& cfg, const std::filesystem::path& dir,
                    const RunOptions& options);
void run_make_videos(const SimulationConfig& cfg, const std::filesystem::path& dir,
                     const RunOptions& options);

}  // namespace embryosim
