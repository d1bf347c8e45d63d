#include "embryosim/object_video.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <regex>

#include "embryosim/errors.hpp"
#include "embryosim/nrrd.hpp"
#include "embryosim/rng.hpp"

namespace embryosim {
namespace {

std::size_t mask_count(const MaskVolume& m) {
  return static_cast<std::size_t>(std::count_if(m.data().begin(), m.data().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

// Orthonormal pair perpendicular to unit vector a.
std::pair<Vec3, Vec3> perpendicular_basis(const Vec3& a) {
  const Vec3 helper = std::abs(a.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 e1 = helper - dot(helper, a) * a;
  e1 = e1 / norm(e1);
  const Vec3 e2{a.y * e1.z - a.z * e1.y, a.z * e1.x - a.x * e1.z, a.x * e1.y - a.y * e1.x};
  return {e1, e2};
}

}  // namespace

double ObjectVideo::nucleus_radius() const {
  if (frames.empty()) throw std::logic_error("nucleus_radius: empty video");
  const double count = static_cast<double>(mask_count(frames.front().mask));
  return std::cbrt(3.0 * count / (4.0 * std::numbers::pi));
}

Vec3 ObjectVideo::final_axis() const {
  if (frames.empty()) throw std::logic_error("final_axis: empty video");
  const MaskVolume& m = frames.back().mask;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  double n = 0.0;
  for (int z = 0; z < m.dims().z; ++z)
    for (int y = 0; y < m.dims().y; ++y)
      for (int x = 0; x < m.dims().x; ++x)
        if (m.at(x, y, z)) {
          mean += Eigen::Vector3d(x, y, z);
          n += 1.0;
        }
  if (n == 0.0) return {1.0, 0.0, 0.0};
  mean /= n;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int z = 0; z < m.dims().z; ++z)
    for (int y = 0; y < m.dims().y; ++y)
      for (int x = 0; x < m.dims().x; ++x)
        if (m.at(x, y, z)) {
          const Eigen::Vector3d d = Eigen::Vector3d(x, y, z) - mean;
          cov += d * d.transpose();
        }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  Eigen::Vector3d axis = solver.eigenvectors().col(2);  // eigenvalues ascending
  // Canonical sign: first non-negligible component positive.
  for (int a = 0; a < 3; ++a) {
    if (std::abs(axis[a]) > 1e-12) {
      if (axis[a] < 0) axis = -axis;
      break;
    }
  }
  return {axis[0], axis[1], axis[2]};
}

void validate(const ObjectVideo& video) {
  const std::string who = "object video " + std::to_string(video.video_id);
  if (video.frames.size() < 2) throw ValidationError(who + ": needs at least 2 frames");
  const Dims dims = video.frames.front().intensity.dims();
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    const auto& f = video.frames[t];
    const std::string where = who + " frame " + std::to_string(t);
    if (f.intensity.dims() != dims || f.mask.dims() != dims) {
      throw ValidationError(where + ": mask/intensity dimension mismatch");
    }
    bool any = false;
    for (std::size_t i = 0; i < f.mask.size(); ++i) {
      if (f.mask[i] == 0) continue;
      any = true;
      if (!(f.intensity[i] > 0.0f)) {
        throw ValidationError(where + ": mask extends beyond intensity support");
      }
    }
    if (!any) throw ValidationError(where + ": empty mask");
    for (float v : f.intensity.data()) {
      if (!(v >= 0.0f) || !std::isfinite(v)) {
        throw ValidationError(where + ": intensities must be finite and non-negative");
      }
    }
  }
}

void validate(const VideoGeneratorSpec& spec) {
  if (spec.frames < 4) throw ValidationError("video generator: frames must be >= 4");
  if (!(spec.base_radius >= 2.0)) throw ValidationError("video generator: base_radius must be >= 2");
  if (!(spec.intensity > 0.0)) throw ValidationError("video generator: intensity must be > 0");
}

ObjectVideo synthesize_object_video(const VideoGeneratorSpec& spec, std::uint64_t seed,
                                    int video_id) {
  validate(spec);
  RandomStream rng(seed, StreamPurpose::video_generator, static_cast<std::uint64_t>(video_id));
  const Vec3 axis = rng.unit_vector();
  const auto [e1, e2] = perpendicular_basis(axis);

  // Three random plane waves give a smooth chromatin-like texture.
  struct Wave {
    Vec3 k;
    double phase;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 3; ++i) {
    waves.push_back({rng.unit_vector() * (2.0 * std::numbers::pi / (0.8 * spec.base_radius)),
                     rng.uniform(0.0, 2.0 * std::numbers::pi)});
  }

  const double r = spec.base_radius;
  const int half = static_cast<int>(std::ceil(2.6 * r));
  const int side = 2 * half + 1;
  const Dims dims{side, side, side};
  const Vec3 center{static_cast<double>(half), static_cast<double>(half),
                    static_cast<double>(half)};

  struct Ellipsoid {
    Vec3 center;
    double along;
    double across;
  };

  ObjectVideo video;
  video.video_id = video_id;
  for (int t = 0; t < spec.frames; ++t) {
    const double u = static_cast<double>(t) / (spec.frames - 1);
    std::vector<Ellipsoid> parts;
    if (u <= 0.5) {
      const double s = 1.0 + u;  // elongation 1 -> 1.5 at constant volume
      parts.push_back({Vec3{}, r * s, r / std::sqrt(s)});
    } else {
      // Daughters end up near +-r/2 of the center, where the division places
      // the two new objects.
      const double v = (u - 0.5) / 0.5;
      const double sep = r * (0.4 + 0.3 * v);
      const double along = r * (0.75 - 0.17 * v);
      parts.push_back({sep * axis, along, 0.7 * r});
      parts.push_back({-sep * axis, along, 0.7 * r});
    }

    VideoFrame frame{Volume<float>(dims, {1.0, 1.0, 1.0}), MaskVolume(dims, {1.0, 1.0, 1.0})};
    for (int z = 0; z < side; ++z)
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
          const Vec3 q = Vec3{double(x), double(y), double(z)} - center;
          double best = 2.0;  // normalized squared ellipsoid radius, smallest over parts
          for (const auto& p : parts) {
            const Vec3 d = q - p.center;
            const double a = dot(d, axis) / p.along;
            const double b = dot(d, e1) / p.across;
            const double c = dot(d, e2) / p.across;
            best = std::min(best, a * a + b * b + c * c);
          }
          if (best > 1.0) continue;
          double tex = 0.0;
          for (const auto& w : waves) tex += std::cos(dot(w.k, q) + w.phase);
          tex = 0.5 * (1.0 + tex / 3.0);  // [0, 1]
          const double value = spec.intensity * (0.8 + 0.2 * tex) * (1.0 - 0.3 * best);
          frame.intensity.at(x, y, z) = static_cast<float>(value);
          frame.mask.at(x, y, z) = 1;
        }
    video.frames.push_back(std::move(frame));
  }
  validate(video);
  return video;
}

std::vector<ObjectVideo> load_object_videos(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("object video directory " + dir.string() + " does not exist");
  }
  static const std::regex kName(R"(vid(\d+)_t(\d+)_(int|mask)\.nrrd)");
  // video id -> frame -> (intensity path, mask path)
  std::map<int, std::map<int, std::pair<std::filesystem::path, std::filesystem::path>>> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, kName)) continue;
    auto& slot = found[std::stoi(m[1])][std::stoi(m[2])];
    (m[3] == "int" ? slot.first : slot.second) = entry.path();
  }
  if (found.empty()) throw ValidationError("no object videos found in " + dir.string());

  std::vector<ObjectVideo> library;
  for (const auto& [file_id, frames] : found) {
    ObjectVideo video;
    video.video_id = static_cast<int>(library.size()) + 1;
    int expected = 0;
    for (const auto& [t, paths] : frames) {
      const std::string where = "video file id " + std::to_string(file_id) + " frame " +
                                std::to_string(t);
      if (t != expected) throw ValidationError(where + ": frames must be consecutive from 0");
      if (paths.first.empty() || paths.second.empty()) {
        throw ValidationError(where + ": needs both _int and _mask files");
      }
      VideoFrame frame{read_volume<float>(paths.first), read_volume<std::uint8_t>(paths.second)};
      for (auto& v : frame.mask.data()) v = v != 0 ? 1 : 0;
      video.frames.push_back(std::move(frame));
      ++expected;
    }
    validate(video);
    library.push_back(std::move(video));
  }
  return library;
}

void write_object_video(const ObjectVideo& video, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    const std::string stem = "vid" + std::to_string(video.video_id) + "_t" + std::to_string(t);
    write_volume(video.frames[t].intensity, dir / (stem + "_int.nrrd"));
    write_volume(video.frames[t].mask, dir / (stem + "_mask.nrrd"));
  }
}

int connected_components(const MaskVolume& mask) {
  const Dims d = mask.dims();
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<std::size_t> queue;
  int components = 0;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    ++components;
    queue.assign(1, start);
    seen[start] = 1;
    while (!queue.empty()) {
      const std::size_t i = queue.back();
      queue.pop_back();
      const int x = static_cast<int>(i % d.x);
      const int y = static_cast<int>((i / d.x) % d.y);
      const int z = static_cast<int>(i / (static_cast<std::size_t>(d.x) * d.y));
      constexpr int kSteps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                    {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
      for (const auto& s : kSteps) {
        const int nx = x + s[0], ny = y + s[1], nz = z + s[2];
        if (!mask.in_bounds(nx, ny, nz)) continue;
        const std::size_t j = mask.offset(nx, ny, nz);
        if (mask[j] && !seen[j]) {
          seen[j] = 1;
          queue.push_back(j);
        }
      }
    }
  }
  return components;
}

}  // namespace embryosim
