#include "embryosim/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>

#include "embryosim/errors.hpp"
#include "embryosim/manifest.hpp"
#include "embryosim/nrrd.hpp"
#include "embryosim/object_table.hpp"
#include "embryosim/parallel.hpp"

namespace embryosim {
namespace {

class Progress {
 public:
  Progress(std::ostream* out, std::string stage) : out_(out), stage_(std::move(stage)) {}
  void frame(int k, const FrameRange& range, const std::string& detail = {}) {
    if (out_ == nullptr) return;
    std::lock_guard lock(mutex_);
    *out_ << '[' << stage_ << "] frame " << k << " (" << range.first << ".." << range.last << ')';
    if (!detail.empty()) *out_ << ' ' << detail;
    *out_ << '\n';
    out_->flush();
  }

 private:
  std::ostream* out_;
  std::string stage_;
  std::mutex mutex_;
};

template <typename Fn>
void run_stage_frames(const std::string& stage, const FrameRange& range, int threads, Fn&& fn) {
  const auto n = static_cast<std::size_t>(range.last - range.first + 1);
  parallel_for(n, threads, [&](std::size_t i) {
    const int frame = range.first + static_cast<int>(i);
    try {
      fn(frame);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage + " frame " + std::to_string(frame) + ": " + e.what());
    }
  });
}

template <typename Fn>
auto in_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage + ": " + e.what());
  }
}

void write_frame_volumes(const std::filesystem::path& dir, int frame, const RenderedFrame& r,
                         const CountVolume& raw) {
  write_volume(raw, dir / frame_file("raw", frame, ".nrrd"));
  write_volume(r.label, dir / frame_file("label", frame, ".nrrd"));
  write_object_table(r.records, dir / frame_file("objects", frame, ".csv"));
}

void write_final(const std::filesystem::path& dir, int frame,
                 const std::vector<CountVolume>& views) {
  write_volume(views.at(0), dir / frame_file("final", frame, ".nrrd"));
  if (views.size() > 1) write_volume(views[1], dir / frame_file("final_v2", frame, ".nrrd"));
}

}  // namespace

std::string frame_file(const std::string& prefix, int frame, const std::string& extension) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_t%04d", frame);
  return prefix + buf + extension;
}

GuideSequence build_guide(const SimulationConfig& cfg) {
  const double padding = cfg.dynamics.r_max;
  if (const auto* f = std::get_if<GuideFile>(&cfg.guide)) {
    return load_guide(cfg.resolve(f->path), padding);
  }
  return synthesize_guide(std::get<GuideGeneratorSpec>(cfg.guide), cfg.seed, padding);
}

std::vector<ObjectVideo> build_video_library(const SimulationConfig& cfg) {
  if (const auto* d = std::get_if<VideoDirectory>(&cfg.videos)) {
    return load_object_videos(cfg.resolve(d->path));
  }
  const auto& g = std::get<VideoGenerator>(cfg.videos);
  std::vector<ObjectVideo> videos;
  for (int id = 1; id <= g.count; ++id) {
    videos.push_back(synthesize_object_video(g.spec, cfg.seed, id));
  }
  return videos;
}

ResolvedInputs resolve_inputs(const SimulationConfig& cfg,
                              const std::optional<FrameRange>& frames) {
  GuideSequence guide = build_guide(cfg);
  VideoLibrary videos(build_video_library(cfg));

  VolumeSpec volume;
  volume.spacing = cfg.volume.spacing;
  volume.origin = cfg.volume.origin.value_or(guide.bounds.lo);
  if (cfg.volume.dims) {
    volume.dims = *cfg.volume.dims;
  } else {
    const Vec3 extent = guide.bounds.hi - volume.origin;
    volume.dims = {static_cast<int>(std::ceil(extent.x / volume.spacing.x)) + 1,
                   static_cast<int>(std::ceil(extent.y / volume.spacing.y)) + 1,
                   static_cast<int>(std::ceil(extent.z / volume.spacing.z)) + 1};
  }

  DynamicsConfig dynamics = cfg.dynamics;
  dynamics.seed = cfg.seed;
  dynamics.video_count = static_cast<int>(videos.size());

  const int last_guide_frame = static_cast<int>(guide.frames.size()) - 1;
  FrameRange range = frames.value_or(cfg.frames.value_or(FrameRange{0, last_guide_frame}));
  if (range.first < 0 || range.last < range.first || range.last > last_guide_frame) {
    throw ValidationError("frame range " + std::to_string(range.first) + ".." +
                          std::to_string(range.last) + " outside guide frames 0.." +
                          std::to_string(last_guide_frame));
  }
  return {std::move(guide), std::move(videos), volume, dynamics, range};
}

AcquisitionConfig resolve_acquisition(const SimulationConfig& cfg, const VolumeSpec& volume) {
  const auto& s = cfg.acquisition;
  AcquisitionConfig a;
  if (const auto* f = std::get_if<PsfFile>(&s.psf)) {
    a.psf = read_volume<double>(cfg.resolve(f->path));
  } else {
    const auto& g = std::get<GaussianPsf>(s.psf);
    a.psf = gaussian_psf(g.sigma_xy, g.sigma_z, volume.spacing);
  }
  a.dark_offset = s.dark_offset;
  if (s.dark_image) {
    a.dark_image = read_volume<double>(cfg.resolve(*s.dark_image));
    if (a.dark_image->dims() != volume.dims) {
      throw ValidationError("acquisition.dark_image dimensions differ from the output volume");
    }
  }
  a.sigma_agn = s.sigma_agn;
  a.shot_noise = s.shot_noise;
  a.attenuation = s.attenuation;
  a.multiview = s.multiview;
  a.bits = s.bits;
  validate(a);
  return a;
}

SimulationResult simulate(const SimulationConfig& cfg, const ResolvedInputs& inputs,
                          int last_frame, int threads, std::ostream* progress) {
  Progress report(progress, "simulate");
  const FrameRange all{0, last_frame};
  SimulationResult result;
  PopulationState state = initialize_population(inputs.guide, cfg.population, inputs.dynamics);
  result.log.initial_embryo = inputs.guide.cell_count(0);
  result.log.initial_sim = state.objects.size();
  report.frame(0, all, "n_sim=" + std::to_string(state.objects.size()));
  result.states.push_back(state);

  const auto axes = inputs.videos.final_axes();
  StepOptions options{axes, threads};
  for (int k = 1; k <= last_frame; ++k) {
    StepReport rep;
    try {
      state = step(state, inputs.guide, cfg.division, inputs.dynamics, options, &rep);
    } catch (const std::exception& e) {
      throw StageError("simulate frame " + std::to_string(k) + ": " + e.what());
    }
    report.frame(k, all,
                 "n_embryo=" + std::to_string(rep.n_embryo) +
                     " n_sim=" + std::to_string(rep.n_sim_after) +
                     " divisions=" + std::to_string(rep.divisions_performed));
    result.log.steps.push_back(std::move(rep));
    result.states.push_back(state);
  }
  return result;
}

void run_simulate(const SimulationConfig& cfg, const std::filesystem::path& dir,
                  const RunOptions& options) {
  const ResolvedInputs inputs = in_stage("simulate", [&] { return resolve_inputs(cfg, options.frames); });
  std::filesystem::create_directories(dir);
  const SimulationResult sim =
      simulate(cfg, inputs, inputs.frames.last, options.threads, options.progress);
  in_stage("simulate", [&] {
    for (int k = inputs.frames.first; k <= inputs.frames.last; ++k) {
      const auto rows = records_from_objects(k, sim.states[k].objects, inputs.volume);
      write_object_table(rows, dir / frame_file("objects", k, ".csv"));
    }
    write_run_log(sim.log, dir / kRunLogName);
    write_manifest(cfg, dir);
    return 0;
  });
}

void run_render(const SimulationConfig& cfg, const std::filesystem::path& dir,
                const RunOptions& options) {
  const ResolvedInputs inputs = in_stage("render", [&] { return resolve_inputs(cfg, options.frames); });
  Progress report(options.progress, "render");
  run_stage_frames("render", inputs.frames, options.threads, [&](int k) {
    const auto rows = read_object_table(dir / frame_file("objects", k, ".csv"));
    const auto objects = objects_from_records(rows);
    const RenderedFrame r = rasterize_frame(k, objects, inputs.videos, inputs.volume);
    write_frame_volumes(dir, k, r, quantize(r.raw));
    report.frame(k, inputs.frames, "objects=" + std::to_string(objects.size()));
  });
  in_stage("render", [&] {
    write_manifest(cfg, dir);
    return 0;
  });
}

void run_acquire(const SimulationConfig& cfg, const std::filesystem::path& dir,
                 const RunOptions& options) {
  const ResolvedInputs inputs = in_stage("acquire", [&] { return resolve_inputs(cfg, options.frames); });
  const AcquisitionConfig acq = in_stage("acquire", [&] { return resolve_acquisition(cfg, inputs.volume); });
  Progress report(options.progress, "acquire");
  run_stage_frames("acquire", inputs.frames, options.threads, [&](int k) {
    const RealVolume raw = read_volume<double>(dir / frame_file("raw", k, ".nrrd"));
    write_final(dir, k, acquire(raw, acq, cfg.seed, static_cast<std::uint64_t>(k)));
    report.frame(k, inputs.frames);
  });
  in_stage("acquire", [&] {
    write_manifest(cfg, dir);
    return 0;
  });
}

void run_full(const SimulationConfig& cfg, const std::filesystem::path& dir,
              const RunOptions& options) {
  const ResolvedInputs inputs = in_stage("full", [&] { return resolve_inputs(cfg, options.frames); });
  const AcquisitionConfig acq = in_stage("acquire", [&] { return resolve_acquisition(cfg, inputs.volume); });
  std::filesystem::create_directories(dir);
  const SimulationResult sim =
      simulate(cfg, inputs, inputs.frames.last, options.threads, options.progress);
  Progress report(options.progress, "full");
  run_stage_frames("render/acquire", inputs.frames, options.threads, [&](int k) {
    const RenderedFrame r =
        rasterize_frame(k, sim.states[k].objects, inputs.videos, inputs.volume);
    const CountVolume raw = quantize(r.raw);
    write_frame_volumes(dir, k, r, raw);
    write_final(dir, k,
                acquire(convert_volume<double>(raw), acq, cfg.seed, static_cast<std::uint64_t>(k)));
    report.frame(k, inputs.frames, "objects=" + std::to_string(r.records.size()));
  });
  in_stage("full", [&] {
    write_run_log(sim.log, dir / kRunLogName);
    write_manifest(cfg, dir);
    return 0;
  });
}

void run_make_guide(const SimulationConfig& cfg, const std::filesystem::path& dir,
                    const RunOptions&) {
  in_stage("make-guide", [&] {
    std::filesystem::create_directories(dir);
    write_guide(build_guide(cfg), dir / "guide.csv");
    return 0;
  });
}

void run_make_videos(const SimulationConfig& cfg, const std::filesystem::path& dir,
                     const RunOptions&) {
  in_stage("make-videos", [&] {
    const auto videos = build_video_library(cfg);
    for (const auto& v : videos) write_object_video(v, dir / "videos");
    return 0;
  });
}

}  // namespace embryosim
