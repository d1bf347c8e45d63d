#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>

#include "embryosim/errors.hpp"
#include "embryosim/guide.hpp"
#include "oracles.hpp"

using namespace embryosim;

namespace {

std::filesystem::path write_text(const std::string& name, const std::string& body) {
  const auto dir = oracle::scratch_dir("guide_" + name);
  const auto path = dir / "guide.csv";
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST_CASE("load_guide reads a valid two-frame file") {
  const auto path = write_text("valid",
                               "frame,id,x,y,z,dx,dy,dz\n"
                               "0,1,0,0,0,1,0,0\n"
                               "0,2,10,0,0,0,1,0\n"
                               "0,3,0,10,0,0,0,1\n"
                               "1,1,1,0,0,0,0,0\n"
                               "1,2,10,1,0,0,0,0\n"
                               "1,3,0,10,1,0,0,0\n");
  const auto g = load_guide(path, 10.0);
  CHECK(g.frames.size() == 2);
  CHECK(g.cell_count(0) == 3);
  CHECK(g.frames[0].cells[1].displacement == Vec3{0, 1, 0});
  // tight box over every position, padded by r_max
  CHECK(g.bounds.lo == Vec3{-10, -10, -10});
  CHECK(g.bounds.hi == Vec3{20, 20, 11});
}

TEST_CASE("load_guide reports a frame gap") {
  const auto path = write_text("gap",
                               "frame,id,x,y,z,dx,dy,dz\n"
                               "0,1,0,0,0,0,0,0\n"
                               "2,1,0,0,0,0,0,0\n");
  CHECK_THROWS_WITH_AS(load_guide(path, 1.0), doctest::Contains("missing frame 1"),
                       ValidationError);
}

TEST_CASE("load_guide names the line of a malformed row") {
  const auto path = write_text("bad",
                               "frame,id,x,y,z,dx,dy,dz\n"
                               "0,1,0,0,0,0,0,0\n"
                               "0,2,abc,0,0,0,0,0\n");
  CHECK_THROWS_WITH_AS(load_guide(path, 1.0), doctest::Contains(":3:"), ParseError);
}

TEST_CASE("load_guide rejects duplicate ids and wrong headers") {
  CHECK_THROWS_AS(load_guide(write_text("dup",
                                        "frame,id,x,y,z,dx,dy,dz\n"
                                        "0,1,0,0,0,0,0,0\n"
                                        "0,1,1,0,0,0,0,0\n"),
                             1.0),
                  ValidationError);
  CHECK_THROWS_AS(load_guide(write_text("hdr", "frame,id,x,y,z\n0,1,0,0,0\n"), 1.0), ParseError);
}

TEST_CASE("synthesize_guide is deterministic and self-consistent") {
  GuideGeneratorSpec spec;
  spec.frames = 10;
  spec.initial_cells = 50;
  spec.growth = 1.05;
  const auto a = synthesize_guide(spec, 7, 10.0);
  const auto b = synthesize_guide(spec, 7, 10.0);
  CHECK(a == b);
  CHECK_FALSE(a == synthesize_guide(spec, 8, 10.0));

  CHECK(a.frames.size() == 10);
  CHECK(a.cell_count(9) >= a.cell_count(0));
  for (std::size_t k = 1; k < a.frames.size(); ++k) {
    CHECK(a.cell_count(k) >= a.cell_count(k - 1));
    CHECK(static_cast<int>(a.cell_count(k)) == generated_cell_count(spec, static_cast<int>(k)));
  }

  // position(k) + displacement(k) == position(k+1), exactly
  for (std::size_t k = 0; k + 1 < a.frames.size(); ++k) {
    std::map<std::int64_t, Vec3> next;
    for (const auto& c : a.frames[k + 1].cells) next[c.id] = c.position;
    for (const auto& c : a.frames[k].cells) {
      REQUIRE(next.count(c.id) == 1);
      CHECK(c.position + c.displacement == next[c.id]);
    }
  }
  for (const auto& c : a.frames.back().cells) CHECK(c.displacement == Vec3{});
  for (const auto& f : a.frames)
    for (const auto& c : f.cells) CHECK(a.bounds.contains(c.position));
}

TEST_CASE("synthesize_guide rejects degenerate specs") {
  GuideGeneratorSpec spec;
  spec.frames = 1;
  CHECK_THROWS_AS(synthesize_guide(spec, 1, 1.0), ValidationError);
  spec = {};
  spec.shell_radius = 0.0;
  CHECK_THROWS_AS(synthesize_guide(spec, 1, 1.0), ValidationError);
  spec = {};
  spec.initial_cells = 4;
  CHECK_THROWS_AS(synthesize_guide(spec, 1, 1.0), ValidationError);
}

TEST_CASE("guide CSV round-trips a generated sequence") {
  GuideGeneratorSpec spec;
  spec.frames = 6;
  spec.initial_cells = 40;
  spec.growth = 1.1;
  const auto g = synthesize_guide(spec, 3, 10.0);
  const auto path = oracle::scratch_dir("guide_roundtrip") / "g.csv";
  write_guide(g, path);
  CHECK(load_guide(path, 10.0) == g);
}

TEST_CASE("generated counts hit 100 -> 300 over 40 frames") {
  GuideGeneratorSpec spec;
  spec.frames = 40;
  spec.initial_cells = 100;
  spec.growth = std::pow(3.0, 1.0 / 39.0);
  CHECK(generated_cell_count(spec, 0) == 100);
  CHECK(generated_cell_count(spec, 39) == 300);
}
