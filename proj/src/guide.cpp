#include "embryosim/guide.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>

#include "embryosim/errors.hpp"
#include "embryosim/rng.hpp"
#include "embryosim/text.hpp"

namespace embryosim {
namespace {

constexpr std::string_view kGuideHeader = "frame,id,x,y,z,dx,dy,dz";

// Generated coordinates live on a 2^-10 µm grid; sums and differences of such
// values are exact in double precision at embryo scale.
double snap(double v) { return std::round(v * 1024.0) / 1024.0; }

}  // namespace

Box guide_bounds(const std::vector<GuideFrame>& frames, double padding) {
  Box box;
  bool first = true;
  for (const auto& frame : frames) {
    for (const auto& cell : frame.cells) {
      if (first) {
        box.lo = box.hi = cell.position;
        first = false;
        continue;
      }
      for (int a = 0; a < 3; ++a) {
        box.lo[a] = std::min(box.lo[a], cell.position[a]);
        box.hi[a] = std::max(box.hi[a], cell.position[a]);
      }
    }
  }
  const Vec3 pad{padding, padding, padding};
  box.lo -= pad;
  box.hi += pad;
  return box;
}

void validate_guide_frames(const std::vector<GuideFrame>& frames) {
  if (frames.empty()) throw ValidationError("guide: no frames");
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const GuideFrame& frame = frames[k];
    if (frame.frame_index != static_cast<int>(k)) {
      throw ValidationError("guide: missing frame " + std::to_string(k));
    }
    if (frame.cells.empty()) {
      throw ValidationError("guide: frame " + std::to_string(k) + " is empty");
    }
    std::set<std::int64_t> ids;
    for (const auto& cell : frame.cells) {
      if (!ids.insert(cell.id).second) {
        throw ValidationError("guide: duplicate cell id " + std::to_string(cell.id) +
                              " in frame " + std::to_string(k));
      }
      if (!is_finite(cell.position) || !is_finite(cell.displacement)) {
        throw ValidationError("guide: non-finite coordinates for cell " +
                              std::to_string(cell.id) + " in frame " + std::to_string(k));
      }
    }
  }
}

GuideSequence load_guide(const std::filesystem::path& path, double padding) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open guide file " + path.string());

  std::string line;
  if (!std::getline(in, line) || text::trim(line) != kGuideHeader) {
    throw ParseError(path.string() + ":1: expected header '" + std::string(kGuideHeader) + "'");
  }

  std::map<std::int64_t, GuideFrame> by_frame;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    auto fail = [&](const std::string& what) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    if (fields.size() != 8) fail("expected 8 fields, got " + std::to_string(fields.size()));
    std::int64_t frame = 0;
    GuideCell cell;
    if (!text::parse_int(fields[0], frame) || frame < 0) fail("bad frame index");
    if (!text::parse_int(fields[1], cell.id)) fail("bad cell id");
    double v[6];
    static constexpr const char* kNames[6] = {"x", "y", "z", "dx", "dy", "dz"};
    for (int i = 0; i < 6; ++i) {
      if (!text::parse_double(fields[2 + i], v[i])) fail(std::string("bad value for ") + kNames[i]);
    }
    cell.position = {v[0], v[1], v[2]};
    cell.displacement = {v[3], v[4], v[5]};
    auto& f = by_frame[frame];
    f.frame_index = static_cast<int>(frame);
    f.cells.push_back(cell);
  }

  GuideSequence seq;
  for (auto& [index, frame] : by_frame) {
    if (static_cast<std::size_t>(index) != seq.frames.size()) {
      throw ValidationError("guide: missing frame " + std::to_string(seq.frames.size()));
    }
    seq.frames.push_back(std::move(frame));
  }
  validate_guide_frames(seq.frames);
  seq.bounds = guide_bounds(seq.frames, padding);
  return seq;
}

void write_guide(const GuideSequence& guide, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write guide file " + path.string());
  out << kGuideHeader << '\n';
  for (const auto& frame : guide.frames) {
    for (const auto& c : frame.cells) {
      out << frame.frame_index << ',' << c.id << ',' << text::format_double(c.position.x) << ','
          << text::format_double(c.position.y) << ',' << text::format_double(c.position.z) << ','
          << text::format_double(c.displacement.x) << ','
          << text::format_double(c.displacement.y) << ','
          << text::format_double(c.displacement.z) << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing guide file " + path.string());
}

void validate(const GuideGeneratorSpec& spec) {
  if (spec.frames < 2) throw ValidationError("guide generator: frames must be >= 2");
  if (spec.initial_cells < 8) throw ValidationError("guide generator: initial_cells must be >= 8");
  if (!(spec.growth >= 1.0)) throw ValidationError("guide generator: growth must be >= 1");
  if (!(spec.shell_radius > 0.0)) throw ValidationError("guide generator: shell_radius must be > 0");
  if (!(spec.shell_thickness >= 0.0 && spec.shell_thickness < spec.shell_radius)) {
    throw ValidationError("guide generator: shell_thickness must be in [0, shell_radius)");
  }
  if (!(spec.start_angle_deg > 0.0 && spec.start_angle_deg <= spec.end_angle_deg &&
        spec.end_angle_deg <= 180.0)) {
    throw ValidationError("guide generator: need 0 < start_angle_deg <= end_angle_deg <= 180");
  }
  if (!(spec.jitter >= 0.0)) throw ValidationError("guide generator: jitter must be >= 0");
}

int generated_cell_count(const GuideGeneratorSpec& spec, int frame) {
  int count = spec.initial_cells;
  for (int k = 1; k <= frame; ++k) {
    const int target =
        static_cast<int>(std::floor(spec.initial_cells * std::pow(spec.growth, k) + 0.5));
    count = std::max(count, target);
  }
  return count;
}

namespace {

// Uniform hash grid over points, for nearest-distance queries capped at one
// cell width.
class ClearanceGrid {
 public:
  explicit ClearanceGrid(double cell) : cell_(cell) {}

  void insert(const Vec3& p) { cells_[key(p, 0, 0, 0)].push_back(p); }

  // Distance to the nearest stored point, or `cell` if none is that close.
  double clearance(const Vec3& p) const {
    double best2 = cell_ * cell_;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const auto it = cells_.find(key(p, dx, dy, dz));
          if (it == cells_.end()) continue;
          for (const Vec3& q : it->second) best2 = std::min(best2, distance_squared(p, q));
        }
    return std::sqrt(best2);
  }

 private:
  std::uint64_t key(const Vec3& p, int dx, int dy, int dz) const {
    auto c = [&](double v, int d) {
      return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(v / cell_)) + d +
                                        (1 << 20)) &
             0x1fffff;
    };
    return c(p.x, dx) | (c(p.y, dy) << 21) | (c(p.z, dz) << 42);
  }

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<Vec3>> cells_;
};

constexpr int kPlacementCandidates = 16;

}  // namespace

GuideSequence synthesize_guide(const GuideGeneratorSpec& spec, std::uint64_t seed,
                               double padding) {
  validate(spec);
  RandomStream rng(seed, StreamPurpose::guide_generator);

  // Material coordinates: fraction of the current cap's area (0 at the pole),
  // azimuth, and depth below the outer shell surface. The cap opening grows
  // linearly in angle, which stretches the sheet toward the equator.
  struct Material {
    std::int64_t id;
    double area_fraction;
    double azimuth;
    double depth;
    Vec3 walk;
  };
  const double deg = std::numbers::pi / 180.0;
  auto cap_angle = [&](int k) {
    const double t = static_cast<double>(k) / (spec.frames - 1);
    return (spec.start_angle_deg + t * (spec.end_angle_deg - spec.start_angle_deg)) * deg;
  };
  auto unwalked = [&](const Material& m, int k) {
    const double cos_theta = 1.0 - m.area_fraction * (1.0 - std::cos(cap_angle(k)));
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    const double rho = spec.shell_radius - m.depth;
    return Vec3{rho * sin_theta * std::cos(m.azimuth), rho * sin_theta * std::sin(m.azimuth),
                rho * cos_theta};
  };
  auto place = [&](const Material& m, int k) {
    const Vec3 q = unwalked(m, k) + m.walk;
    return Vec3{snap(q.x), snap(q.y), snap(q.z)};
  };
  // Inverse of `unwalked` at frame k, clamped into the sheet.
  auto material_at = [&](const Vec3& p, int k) {
    Material m{};
    const double rho = std::max(norm(p), 1e-9);
    m.depth = std::clamp(spec.shell_radius - rho, 0.0, spec.shell_thickness);
    const double cos_theta = std::clamp(p.z / rho, -1.0, 1.0);
    m.area_fraction = std::clamp((1.0 - cos_theta) / (1.0 - std::cos(cap_angle(k))), 0.0, 1.0);
    m.azimuth = std::atan2(p.y, p.x);
    return m;
  };
  // Typical nearest-neighbor spacing of n cells filling the sheet at frame k.
  auto spacing = [&](int k, std::size_t n) {
    const double r_out = spec.shell_radius;
    const double r_in = std::max(0.0, spec.shell_radius - spec.shell_thickness);
    const double volume = 2.0 * std::numbers::pi / 3.0 * (1.0 - std::cos(cap_angle(k))) *
                          (r_out * r_out * r_out - r_in * r_in * r_in);
    return std::cbrt(volume / static_cast<double>(n));
  };

  // Initial cells by best-candidate sampling, so that no two nuclei start on
  // top of each other.
  std::vector<Material> cells;
  std::int64_t next_id = 1;
  {
    ClearanceGrid grid(2.0 * spacing(0, static_cast<std::size_t>(spec.initial_cells)));
    for (int i = 0; i < spec.initial_cells; ++i) {
      Material best{};
      double best_clearance = -1.0;
      for (int c = 0; c < kPlacementCandidates; ++c) {
        Material m{next_id, rng.uniform(), rng.uniform(0.0, 2.0 * std::numbers::pi),
                   rng.uniform() * spec.shell_thickness, Vec3{}};
        const double clearance = grid.clearance(place(m, 0));
        if (clearance > best_clearance) {
          best = m;
          best_clearance = clearance;
        }
      }
      grid.insert(place(best, 0));
      cells.push_back(best);
      ++next_id;
    }
  }

  std::vector<GuideFrame> frames(spec.frames);
  for (int k = 0; k < spec.frames; ++k) {
    if (k > 0) {
      for (auto& m : cells) {
        m.walk += Vec3{rng.normal(0.0, spec.jitter), rng.normal(0.0, spec.jitter),
                       rng.normal(0.0, spec.jitter)};
      }
      const int target = generated_cell_count(spec, k);
      if (static_cast<int>(cells.size()) < target) {
        const double s = spacing(k, static_cast<std::size_t>(target));
        ClearanceGrid grid(2.0 * s);
        for (const auto& m : cells) grid.insert(place(m, k));
        const std::size_t existing = cells.size();
        while (static_cast<int>(cells.size()) < target) {
          // A new cell buds off a random existing one, on whichever side
          // has the most room.
          const Material& parent = cells[static_cast<std::size_t>(
              rng.uniform_int(0, static_cast<std::int64_t>(existing) - 1))];
          const Vec3 origin = unwalked(parent, k);
          Material best{};
          double best_clearance = -1.0;
          for (int c = 0; c < kPlacementCandidates; ++c) {
            Material m = material_at(origin + rng.unit_vector() * s, k);
            m.walk = parent.walk;
            const double clearance = grid.clearance(place(m, k));
            if (clearance > best_clearance) {
              best = m;
              best_clearance = clearance;
            }
          }
          best.id = next_id++;
          grid.insert(place(best, k));
          cells.push_back(best);
        }
      }
    }
    frames[k].frame_index = k;
    frames[k].cells.reserve(cells.size());
    for (const auto& m : cells) frames[k].cells.push_back({m.id, place(m, k), Vec3{}});
  }

  // Forward differences; every cell present at k continues to k+1.
  for (int k = 0; k + 1 < spec.frames; ++k) {
    std::unordered_map<std::int64_t, Vec3> next;
    for (const auto& c : frames[k + 1].cells) next.emplace(c.id, c.position);
    for (auto& c : frames[k].cells) c.displacement = next.at(c.id) - c.position;
  }

  GuideSequence seq;
  seq.frames = std::move(frames);
  validate_guide_frames(seq.frames);
  seq.bounds = guide_bounds(seq.frames, padding);
  return seq;
}

}  // namespace embryosim
