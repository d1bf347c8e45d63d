#include "embryosim/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "embryosim/errors.hpp"

namespace embryosim {
namespace {

template <typename T>
double trilinear(const Volume<T>& v, double x, double y, double z) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int z0 = static_cast<int>(std::floor(z));
  const double fx = x - x0, fy = y - y0, fz = z - z0;
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? fz : 1.0 - fz;
    if (wz == 0.0) continue;
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? fy : 1.0 - fy;
      if (wy == 0.0) continue;
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? fx : 1.0 - fx;
        if (wx == 0.0 || !v.in_bounds(x0 + dx, y0 + dy, z0 + dz)) continue;
        acc += wx * wy * wz * static_cast<double>(v.at(x0 + dx, y0 + dy, z0 + dz));
      }
    }
  }
  return acc;
}

Vec3 grid_center(const Dims& d) {
  return {(d.x - 1) / 2.0, (d.y - 1) / 2.0, (d.z - 1) / 2.0};
}

}  // namespace

VideoLibrary::VideoLibrary(std::vector<ObjectVideo> videos) : videos_(std::move(videos)) {
  if (videos_.empty()) throw ValidationError("object video library is empty");
  for (const auto& v : videos_) {
    validate(v);
    radii_.push_back(v.nucleus_radius());
    const Vec3 c = grid_center(v.frames.front().mask.dims());
    std::vector<Box> per_frame;
    for (const auto& f : v.frames) {
      Box box{{1e300, 1e300, 1e300}, {-1e300, -1e300, -1e300}};
      const Dims d = f.mask.dims();
      for (int z = 0; z < d.z; ++z)
        for (int y = 0; y < d.y; ++y)
          for (int x = 0; x < d.x; ++x)
            if (f.mask.at(x, y, z)) {
              const Vec3 p = Vec3{double(x), double(y), double(z)} - c;
              for (int a = 0; a < 3; ++a) {
                box.lo[a] = std::min(box.lo[a], p[a]);
                box.hi[a] = std::max(box.hi[a], p[a]);
              }
            }
      per_frame.push_back(box);
    }
    extents_.push_back(std::move(per_frame));
  }
}

const ObjectVideo& VideoLibrary::video(int video_id) const {
  if (video_id < 1 || static_cast<std::size_t>(video_id) > videos_.size()) {
    throw std::out_of_range("video id " + std::to_string(video_id) + " not in library of " +
                            std::to_string(videos_.size()));
  }
  return videos_[static_cast<std::size_t>(video_id - 1)];
}

double VideoLibrary::nucleus_radius(int video_id) const {
  video(video_id);
  return radii_[static_cast<std::size_t>(video_id - 1)];
}

const Box& VideoLibrary::mask_extent(int video_id, int frame) const {
  video(video_id);
  return extents_[static_cast<std::size_t>(video_id - 1)].at(static_cast<std::size_t>(frame));
}

std::vector<Vec3> VideoLibrary::final_axes() const {
  std::vector<Vec3> axes;
  axes.reserve(videos_.size());
  for (const auto& v : videos_) axes.push_back(v.final_axis());
  return axes;
}

int video_frame_for(int cycle_state, int cycle_length, int video_frames) {
  if (video_frames < 1) throw std::invalid_argument("video_frame_for: empty video");
  if (cycle_length <= 1) return video_frames - 1;
  const double progress =
      static_cast<double>(cycle_state - 1) / static_cast<double>(cycle_length - 1);
  const auto f = static_cast<int>(std::floor(progress * (video_frames - 1) + 0.5));
  return std::clamp(f, 0, video_frames - 1);
}

RenderedFrame rasterize_frame(int frame, std::span<const SimObject> objects,
                              const VideoLibrary& library, const VolumeSpec& spec) {
  RenderedFrame out{RealVolume(spec.dims, spec.spacing), LabelVolume(spec.dims, spec.spacing), {}};
  std::vector<double> strength(spec.dims.voxels(), 0.0);
  const Dims d = spec.dims;

  for (std::size_t n = 0; n < objects.size(); ++n) {
    const SimObject& o = objects[n];
    if (n > 0 && objects[n - 1].id >= o.id) {
      throw std::invalid_argument("rasterize_frame: objects must be in ascending id order");
    }
    if (o.id > std::numeric_limits<std::uint16_t>::max()) {
      throw std::overflow_error("object id " + std::to_string(o.id) +
                                " does not fit a 16-bit label volume");
    }
    const ObjectVideo& video = library.video(o.video_id);
    const int vf = video_frame_for(o.cycle_state, o.cycle_length,
                                   static_cast<int>(video.frame_count()));
    const VideoFrame& src = video.frames[static_cast<std::size_t>(vf)];
    const Vec3 vcenter = grid_center(src.mask.dims());
    const double scale = o.radius / library.nucleus_radius(o.video_id);  // µm per video voxel
    const Vec3 cvox = spec.to_voxel(o.position);

    // Nucleus footprint in output voxels, before clipping.
    const Box& ext = library.mask_extent(o.video_id, vf);
    ObjectRecord rec;
    rec.clipped = false;
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
      const double margin = scale / spec.spacing[a];  // one video voxel
      const double flo = cvox[a] + ext.lo[a] * scale / spec.spacing[a] - margin;
      const double fhi = cvox[a] + ext.hi[a] * scale / spec.spacing[a] + margin;
      if (flo < 0.0 || fhi > d[a] - 1) rec.clipped = true;
      lo[a] = std::max(0, static_cast<int>(std::ceil(flo)));
      hi[a] = std::min(d[a] - 1, static_cast<int>(std::floor(fhi)));
    }

    for (int z = lo[2]; z <= hi[2]; ++z)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int x = lo[0]; x <= hi[0]; ++x) {
          const Vec3 world{spec.origin.x + x * spec.spacing.x, spec.origin.y + y * spec.spacing.y,
                           spec.origin.z + z * spec.spacing.z};
          const Vec3 q = vcenter + (world - o.position) / scale;
          const double value = trilinear(src.intensity, q.x, q.y, q.z);
          if (value <= 0.0) continue;
          const std::size_t i = out.raw.offset(x, y, z);
          out.raw[i] = std::max(out.raw[i], value);
          if (trilinear(src.mask, q.x, q.y, q.z) >= 0.5 && value > strength[i]) {
            strength[i] = value;
            out.label[i] = static_cast<std::uint16_t>(o.id);
          }
        }

    rec.frame = frame;
    rec.id = o.id;
    rec.parent_id = o.parent_id;
    rec.position = o.position;
    rec.voxel = cvox;
    rec.radius = o.radius;
    rec.cycle_state = o.cycle_state;
    rec.cycle_length = o.cycle_length;
    rec.video_id = o.video_id;
    out.records.push_back(rec);
  }

  std::vector<std::int64_t> counts(std::numeric_limits<std::uint16_t>::max() + 1, 0);
  for (std::uint16_t v : out.label.data()) ++counts[v];
  for (auto& rec : out.records) rec.labeled_voxels = counts[static_cast<std::size_t>(rec.id)];
  return out;
}

}  // namespace embryosim
