#include <doctest.h>

#include <cmath>
#include <numbers>

#include "embryosim/render.hpp"

using namespace embryosim;

namespace {

// Sphere of `radius` voxels with constant intensity, identical in every frame.
ObjectVideo sphere_video(double radius, float intensity, int frames = 3, int video_id = 1) {
  const int half = static_cast<int>(std::ceil(radius)) + 2;
  const int side = 2 * half + 1;
  ObjectVideo v;
  v.video_id = video_id;
  for (int t = 0; t < frames; ++t) {
    VideoFrame f{Volume<float>({side, side, side}, {1, 1, 1}), MaskVolume({side, side, side}, {1, 1, 1})};
    for (int z = 0; z < side; ++z)
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
          const double dx = x - half, dy = y - half, dz = z - half;
          if (dx * dx + dy * dy + dz * dz <= radius * radius) {
            f.intensity.at(x, y, z) = intensity;
            f.mask.at(x, y, z) = 1;
          }
        }
    v.frames.push_back(std::move(f));
  }
  return v;
}

SimObject object_at(std::int64_t id, Vec3 pos, double r, int video_id = 1) {
  SimObject o;
  o.id = id;
  o.position = pos;
  o.radius = r;
  o.cycle_state = 1;
  o.cycle_length = 10;
  o.video_id = video_id;
  return o;
}

struct LabelStats {
  std::int64_t count = 0;
  Vec3 centroid;
};

LabelStats label_stats(const LabelVolume& label, std::uint16_t id) {
  LabelStats s;
  for (int z = 0; z < label.dims().z; ++z)
    for (int y = 0; y < label.dims().y; ++y)
      for (int x = 0; x < label.dims().x; ++x)
        if (label.at(x, y, z) == id) {
          ++s.count;
          s.centroid += Vec3{double(x), double(y), double(z)};
        }
  if (s.count > 0) s.centroid = s.centroid / static_cast<double>(s.count);
  return s;
}

}  // namespace

TEST_CASE("video frame mapping") {
  CHECK(video_frame_for(1, 29, 13) == 0);
  CHECK(video_frame_for(29, 29, 13) == 12);
  CHECK(video_frame_for(15, 29, 13) == 6);
  CHECK(video_frame_for(2, 3, 2) == 1);  // 0.5 rounds up
  CHECK(video_frame_for(1, 1, 5) == 4);
}

TEST_CASE("single object is placed and scaled") {
  std::vector<ObjectVideo> vids{sphere_video(6.0, 100.0f)};
  const VideoLibrary lib(vids);
  VolumeSpec spec{{48, 48, 24}, {1, 1, 2}, {-10, -10, -10}};
  const SimObject o = object_at(5, {14.3, 13.6, 14.2}, 8.0);
  const std::vector<SimObject> objs{o};
  const auto frame = rasterize_frame(3, objs, lib, spec);

  REQUIRE(frame.records.size() == 1);
  const auto& rec = frame.records[0];
  CHECK(rec.frame == 3);
  CHECK(rec.id == 5);
  CHECK(rec.voxel.x == doctest::Approx(24.3));
  CHECK(rec.voxel.y == doctest::Approx(23.6));
  CHECK(rec.voxel.z == doctest::Approx(12.1));
  CHECK_FALSE(rec.clipped);

  const auto s = label_stats(frame.label, 5);
  CHECK(rec.labeled_voxels == s.count);
  // nucleus volume in output voxels: 4/3 pi r^3 / (1 * 1 * 2)
  const double expected = 4.0 / 3.0 * std::numbers::pi * 512.0 / 2.0;
  CHECK(std::abs(static_cast<double>(s.count) - expected) <= 0.15 * expected);
  CHECK(norm(s.centroid - rec.voxel) <= 1.5);

  double max_raw = 0.0;
  for (double v : frame.raw.data()) max_raw = std::max(max_raw, v);
  CHECK(max_raw == doctest::Approx(100.0));
  for (std::size_t i = 0; i < frame.raw.size(); ++i) {
    if (frame.label[i] != 0) CHECK(frame.raw[i] > 0.0);
  }
}

TEST_CASE("disjoint objects composite independently") {
  std::vector<ObjectVideo> vids{sphere_video(5.0, 100.0f)};
  const VideoLibrary lib(vids);
  VolumeSpec spec{{60, 30, 30}, {1, 1, 1}, {0, 0, 0}};
  const std::vector<SimObject> both{object_at(1, {15, 15, 15}, 6), object_at(2, {45, 15, 15}, 6)};
  const auto f = rasterize_frame(0, both, lib, spec);
  const auto a = rasterize_frame(0, std::span(both).first(1), lib, spec);
  const auto b = rasterize_frame(0, std::span(both).last(1), lib, spec);
  for (std::size_t i = 0; i < f.raw.size(); ++i) {
    CHECK(f.raw[i] == std::max(a.raw[i], b.raw[i]));
    CHECK(f.label[i] == std::max(a.label[i], b.label[i]));
  }
  CHECK(f.records[0].labeled_voxels == a.records[0].labeled_voxels);
  CHECK(f.records[1].labeled_voxels == b.records[0].labeled_voxels);
  CHECK(norm(label_stats(f.label, 1).centroid - Vec3{15, 15, 15}) <= 1.5);
  CHECK(norm(label_stats(f.label, 2).centroid - Vec3{45, 15, 15}) <= 1.5);
}

TEST_CASE("overlapping objects") {
  std::vector<ObjectVideo> vids{sphere_video(5.0, 100.0f, 3, 1), sphere_video(5.0, 200.0f, 3, 2)};
  const VideoLibrary lib(vids);
  VolumeSpec spec{{40, 30, 30}, {1, 1, 1}, {0, 0, 0}};

  SUBCASE("brighter object owns the overlap") {
    const std::vector<SimObject> objs{object_at(1, {15, 15, 15}, 6, 2), object_at(2, {21, 15, 15}, 6, 1)};
    const auto f = rasterize_frame(0, objs, lib, spec);
    CHECK(f.label.at(18, 15, 15) == 1);
    CHECK(f.raw.at(18, 15, 15) == doctest::Approx(200.0));
    CHECK(f.label.at(25, 15, 15) == 2);
  }
  SUBCASE("equal intensities go to the lower id") {
    const std::vector<SimObject> objs{object_at(3, {18, 15, 15}, 6), object_at(4, {18, 15, 15}, 6)};
    const auto f = rasterize_frame(0, objs, lib, spec);
    CHECK(f.records[0].labeled_voxels > 0);
    CHECK(f.records[1].labeled_voxels == 0);
  }
}

TEST_CASE("clipping and label range") {
  std::vector<ObjectVideo> vids{sphere_video(4.0, 50.0f)};
  const VideoLibrary lib(vids);
  VolumeSpec spec{{20, 20, 20}, {1, 1, 1}, {0, 0, 0}};
  std::vector<SimObject> corner{object_at(1, {1, 1, 1}, 5)};
  const auto f = rasterize_frame(0, corner, lib, spec);
  CHECK(f.records[0].clipped);
  CHECK(f.records[0].labeled_voxels > 0);

  std::vector<SimObject> outside{object_at(1, {200, 200, 200}, 5)};
  const auto g = rasterize_frame(0, outside, lib, spec);
  CHECK(g.records[0].clipped);
  CHECK(g.records[0].labeled_voxels == 0);

  std::vector<SimObject> big{object_at(70000, {10, 10, 10}, 5)};
  CHECK_THROWS_AS(rasterize_frame(0, big, lib, spec), std::overflow_error);

  std::vector<SimObject> unordered{object_at(2, {5, 5, 5}, 5), object_at(1, {15, 15, 15}, 5)};
  CHECK_THROWS(rasterize_frame(0, unordered, lib, spec));

  const auto empty = rasterize_frame(0, std::span<const SimObject>{}, lib, spec);
  for (double v : empty.raw.data()) CHECK(v == 0.0);
}
