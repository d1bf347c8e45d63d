#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "embryosim/errors.hpp"
#include "embryosim/manifest.hpp"
#include "embryosim/nrrd.hpp"
#include "embryosim/object_table.hpp"
#include "embryosim/pipeline.hpp"
#include "oracles.hpp"

using namespace embryosim;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"({
  "seed": 21,
  "guide": {"generator": {"frames": 5, "initial_cells": 40, "growth": 1.1,
                          "shell_radius": 40, "shell_thickness": 10}},
  "dynamics": {"l_min": 1, "l_max": 4},
  "volume": {"spacing": [4, 4, 4]},
  "acquisition": {"psf": {"gaussian": {"sigma_xy": 1.0, "sigma_z": 1.5}}, "multiview": true},
  "videos": {"generator": {"count": 2, "frames": 4, "base_radius": 3}}
})";

fs::path write_config(const fs::path& dir, const std::string& text = kSmallConfig) {
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << text;
  return dir / "config.json";
}

std::map<std::string, std::string> outputs(const fs::path& dir) {
  auto files = directory_checksums(dir);
  return files;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string("\"") + EMBRYOSIM_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("frame file names") {
  CHECK(frame_file("raw", 3, ".nrrd") == "raw_t0003.nrrd");
  CHECK(frame_file("objects", 1234, ".csv") == "objects_t1234.csv");
}

TEST_CASE("resolved inputs") {
  const auto dir = oracle::scratch_dir("pipe_inputs");
  const auto cfg = parse_config(write_config(dir));
  const auto in = resolve_inputs(cfg);
  CHECK(in.frames == FrameRange{0, 4});
  CHECK(in.volume.origin == in.guide.bounds.lo);
  const Vec3 far = in.volume.to_voxel(in.guide.bounds.hi);
  CHECK(far.x <= in.volume.dims.x - 1);
  CHECK(far.z <= in.volume.dims.z - 1);
  CHECK(in.dynamics.seed == 21);
  CHECK(in.dynamics.video_count == 2);
  CHECK_THROWS_AS(resolve_inputs(cfg, FrameRange{0, 5}), ValidationError);
}

TEST_CASE("full run writes every product") {
  const auto dir = oracle::scratch_dir("pipe_full");
  const auto cfg = parse_config(write_config(dir));
  run_full(cfg, dir / "out", {});
  for (int k = 0; k <= 4; ++k) {
    for (const char* p : {"raw", "label", "final", "final_v2"}) {
      CHECK(fs::exists(dir / "out" / frame_file(p, k, ".nrrd")));
      CHECK(fs::exists(dir / "out" / frame_file(p, k, ".raw")));
    }
    const auto rows = read_object_table(dir / "out" / frame_file("objects", k, ".csv"));
    CHECK_FALSE(rows.empty());
    const auto label = read_volume<std::uint16_t>(dir / "out" / frame_file("label", k, ".nrrd"));
    std::set<std::int64_t> live;
    for (const auto& r : rows) live.insert(r.id);
    for (auto v : label.data()) {
      if (v != 0) CHECK(live.count(v) == 1);
    }
    for (const auto& r : rows) {
      if (!r.clipped) CHECK(r.labeled_voxels > 0);
    }
  }
  CHECK(fs::exists(dir / "out" / "run.log"));
  CHECK(verify_manifest(dir / "out").empty());
  const auto log = read_run_log(dir / "out" / "run.log");
  CHECK(log.steps.size() == 4);
}

TEST_CASE("staged runs reproduce the full run") {
  const auto dir = oracle::scratch_dir("pipe_staged");
  const auto cfg = parse_config(write_config(dir));
  run_full(cfg, dir / "full", {});
  run_simulate(cfg, dir / "staged", {});
  run_render(cfg, dir / "staged", {});
  run_acquire(cfg, dir / "staged", {});
  CHECK(outputs(dir / "full") == outputs(dir / "staged"));

  RunOptions threaded;
  threaded.threads = 4;
  run_full(cfg, dir / "threaded", threaded);
  CHECK(outputs(dir / "full") == outputs(dir / "threaded"));
}

TEST_CASE("frame subranges") {
  const auto dir = oracle::scratch_dir("pipe_range");
  const auto cfg = parse_config(write_config(dir));
  run_full(cfg, dir / "all", {});
  RunOptions sub;
  sub.frames = FrameRange{2, 3};
  run_full(cfg, dir / "sub", sub);
  const auto all = outputs(dir / "all");
  const auto part = outputs(dir / "sub");
  CHECK_FALSE(part.count("raw_t0001.raw"));
  for (const char* name : {"raw_t0002.raw", "label_t0003.raw", "final_t0003.raw", "objects_t0002.csv"}) {
    REQUIRE(part.count(name));
    CHECK(part.at(name) == all.at(name));
  }
}

TEST_CASE("stage errors name the stage and frame") {
  const auto dir = oracle::scratch_dir("pipe_errors");
  const auto cfg = parse_config(write_config(dir));
  CHECK_THROWS_WITH_AS(run_render(cfg, dir / "nothing", {}), doctest::Contains("render frame 0"),
                       StageError);
  CHECK_THROWS_WITH_AS(run_acquire(cfg, dir / "nothing", {}), doctest::Contains("acquire frame 0"),
                       StageError);
}

TEST_CASE("make-guide and make-videos feed a file-based run") {
  const auto dir = oracle::scratch_dir("pipe_files");
  const auto cfg = parse_config(write_config(dir));
  run_make_guide(cfg, dir, {});
  run_make_videos(cfg, dir, {});
  const std::string file_cfg = R"({
    "seed": 21,
    "guide": {"file": "guide.csv"},
    "dynamics": {"l_min": 1, "l_max": 4},
    "volume": {"spacing": [4, 4, 4]},
    "acquisition": {"psf": {"gaussian": {"sigma_xy": 1.0, "sigma_z": 1.5}}, "multiview": true},
    "videos": {"directory": "videos"}
  })";
  std::ofstream(dir / "files.json") << file_cfg;
  const auto cfg2 = parse_config(dir / "files.json");
  run_full(cfg, dir / "gen", {});
  run_full(cfg2, dir / "file", {});
  auto a = outputs(dir / "gen");
  auto b = outputs(dir / "file");
  CHECK(a == b);
}

TEST_CASE("command line") {
  const auto dir = oracle::scratch_dir("pipe_cli");
  const auto cfg = write_config(dir);
  const auto out = dir / "out";
  REQUIRE(run_cli("full --config \"" + cfg.string() + "\" --out \"" + out.string() +
                      "\" --set dynamics.K=5 --threads 2",
                  dir / "log.txt") == 0);
  const auto manifest = read_manifest(out);
  CHECK(manifest["config"]["dynamics"]["K"] == 5);
  CHECK(manifest["seed"] == 21);
  CHECK(slurp(dir / "log.txt").find("[simulate] frame") != std::string::npos);

  CHECK(run_cli("full --config \"" + cfg.string() + "\" --out \"" + out.string() +
                    "\" --set dynamics.w_rep=-1",
                dir / "bad.txt") != 0);
  CHECK(slurp(dir / "bad.txt").find("w_rep") != std::string::npos);

  CHECK(run_cli("full --config \"" + (dir / "none.json").string() + "\"", dir / "none.txt") != 0);
  CHECK(run_cli("full --config \"" + cfg.string() + "\"", dir / "noout.txt") != 0);
  CHECK(slurp(dir / "noout.txt").find("no output directory") != std::string::npos);
  CHECK(run_cli("bogus", dir / "bogus.txt") != 0);
}
