#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace oracle {

namespace {
double d2(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}
}  // namespace

std::vector<std::int64_t> knn_ids(std::span<const IndexedPoint> points, const Vec3& x, int k,
                                  std::optional<std::int64_t> exclude) {
  std::vector<std::pair<double, std::int64_t>> all;
  for (const auto& p : points) {
    if (exclude && p.id == *exclude) continue;
    all.emplace_back(d2(x, p.position), p.id);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::int64_t> ids;
  for (std::size_t i = 0; i < all.size() && i < static_cast<std::size_t>(k); ++i) {
    ids.push_back(all[i].second);
  }
  return ids;
}

std::size_t range_count(std::span<const IndexedPoint> points, const Vec3& x, double r,
                        std::optional<std::int64_t> exclude) {
  std::size_t n = 0;
  for (const auto& p : points) {
    if (exclude && p.id == *exclude) continue;
    if (d2(x, p.position) <= r * r) ++n;
  }
  return n;
}

Vec3 mean_nearest_displacement(const embryosim::GuideFrame& frame, const Vec3& x, int k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < frame.cells.size(); ++i) {
    all.emplace_back(d2(x, frame.cells[i].position), i);
  }
  std::sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return frame.cells[a.second].id < frame.cells[b.second].id;
  });
  const std::size_t n = std::min<std::size_t>(all.size(), static_cast<std::size_t>(k));
  Vec3 sum;
  for (std::size_t i = 0; i < n; ++i) sum += frame.cells[all[i].second].displacement;
  return sum / static_cast<double>(n);
}

embryosim::RealVolume direct_convolution(const embryosim::RealVolume& in,
                                         const embryosim::RealVolume& psf) {
  const auto d = in.dims();
  const auto k = psf.dims();
  const int cx = k.x / 2, cy = k.y / 2, cz = k.z / 2;
  embryosim::RealVolume out(d, in.spacing());
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x) {
        double acc = 0.0;
        for (int kz = 0; kz < k.z; ++kz)
          for (int ky = 0; ky < k.y; ++ky)
            for (int kx = 0; kx < k.x; ++kx) {
              const int sx = x + cx - kx, sy = y + cy - ky, sz = z + cz - kz;
              if (!in.in_bounds(sx, sy, sz)) continue;
              acc += psf.at(kx, ky, kz) * in.at(sx, sy, sz);
            }
        out.at(x, y, z) = acc;
      }
  return out;
}

double relative_max_error(const embryosim::RealVolume& a, const embryosim::RealVolume& b) {
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    err = std::max(err, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return scale == 0.0 ? err : err / scale;
}

std::vector<IndexedPoint> random_points(std::size_t n, std::uint64_t seed, double extent,
                                        bool integer_grid) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<IndexedPoint> pts;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 p{u(gen), u(gen), u(gen)};
    if (integer_grid) p = {std::floor(p.x), std::floor(p.y), std::floor(p.z)};
    pts.push_back({static_cast<std::int64_t>(i) * 7 + 3, p});
  }
  return pts;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("embryosim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
