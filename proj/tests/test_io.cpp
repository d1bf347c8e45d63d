#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "embryosim/config.hpp"
#include "embryosim/errors.hpp"
#include "embryosim/manifest.hpp"
#include "embryosim/nrrd.hpp"
#include "embryosim/object_table.hpp"
#include "embryosim/run_log.hpp"
#include "oracles.hpp"

using namespace embryosim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json minimal_doc() { return json::parse(R"({"seed": 3, "guide": {"generator": {}}})"); }

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<ObjectRecord> random_records(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  std::vector<ObjectRecord> rows;
  for (std::size_t i = 0; i < n; ++i) {
    ObjectRecord r;
    r.frame = static_cast<int>(i / 100);
    r.id = static_cast<std::int64_t>(i % 100) + 1 + 100 * r.frame;
    if (r.frame > 0 && i % 3 == 0) r.parent_id = r.id - 100 - static_cast<std::int64_t>(i % 7);
    r.position = {u(gen), u(gen), u(gen) * 1e-7};
    r.voxel = {u(gen) / 3, u(gen), 1.0 / 3.0};
    r.radius = 7.0 + std::abs(u(gen)) / 166.0;
    r.cycle_state = static_cast<int>(i % 30) + 1;
    r.cycle_length = 30;
    r.video_id = static_cast<int>(i % 8) + 1;
    r.labeled_voxels = static_cast<std::int64_t>(i * 13 % 900);
    r.clipped = i % 5 == 0;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("minimal config takes the published defaults") {
  const auto cfg = config_from_json(minimal_doc());
  CHECK(cfg.seed == 3);
  CHECK(cfg.dynamics.w_dir == 1.0);
  CHECK(cfg.dynamics.w_rep == 1.0);
  CHECK(cfg.dynamics.w_nna == 0.1);
  CHECK(cfg.dynamics.k_neighbors == 10);
  CHECK(cfg.dynamics.r_min == 7.0);
  CHECK(cfg.dynamics.r_max == 10.0);
  CHECK(cfg.dynamics.l_min == 28);
  CHECK(std::get<InitialFraction>(cfg.population).p == 0.5);
  CHECK(cfg.division.variant == DivisionVariant::count_coupled_density);
  CHECK(cfg.division.p == 0.5);
  CHECK(cfg.acquisition.dark_offset == 100.0);
  CHECK(cfg.acquisition.bits == 16);
  CHECK(std::holds_alternative<GuideGeneratorSpec>(cfg.guide));
  CHECK_FALSE(cfg.frames.has_value());
}

TEST_CASE("config rejections") {
  auto doc = minimal_doc();
  SUBCASE("population p and count together") {
    doc["population"] = {{"p", 0.5}, {"count", 10}};
    CHECK_THROWS_AS(config_from_json(doc), ValidationError);
  }
  SUBCASE("negative weight") {
    doc["dynamics"] = {{"w_rep", -1}};
    CHECK_THROWS_WITH_AS(config_from_json(doc), doctest::Contains("w_rep"), ValidationError);
  }
  SUBCASE("unknown key names the key") {
    doc["dynamics"] = {{"w_bogus", 1}};
    CHECK_THROWS_WITH_AS(config_from_json(doc), doctest::Contains("dynamics.w_bogus"), ValidationError);
  }
  SUBCASE("unknown top-level key") {
    doc["extra"] = 1;
    CHECK_THROWS_AS(config_from_json(doc), ValidationError);
  }
  SUBCASE("wrong type") {
    doc["dynamics"] = {{"K", "ten"}};
    CHECK_THROWS_WITH_AS(config_from_json(doc), doctest::Contains("dynamics.K"), ValidationError);
  }
  SUBCASE("guide file and generator together") {
    doc["guide"]["file"] = "g.csv";
    CHECK_THROWS_AS(config_from_json(doc), ValidationError);
  }
  SUBCASE("missing guide") {
    doc.erase("guide");
    CHECK_THROWS_AS(config_from_json(doc), ValidationError);
  }
  SUBCASE("radius ordering") {
    doc["dynamics"] = {{"r_min", 12}, {"r_max", 10}};
    CHECK_THROWS_AS(config_from_json(doc), ValidationError);
  }
  SUBCASE("bad attenuation") {
    doc["acquisition"] = {{"attenuation", "sideways"}};
    CHECK_THROWS_AS(config_from_json(doc), ValidationError);
  }
  SUBCASE("bad division model") {
    doc["division"] = {{"model", "random"}};
    CHECK_THROWS_AS(config_from_json(doc), ValidationError);
  }
  SUBCASE("bad frame range") {
    doc["frames"] = {4, 2};
    CHECK_THROWS_AS(config_from_json(doc), ValidationError);
  }
}

TEST_CASE("config overrides and round trip") {
  auto doc = minimal_doc();
  apply_override(doc, "dynamics.K=5");
  apply_override(doc, "acquisition.attenuation=inverted");
  apply_override(doc, "division.model=\"oldest\"");
  const auto cfg = config_from_json(doc);
  CHECK(cfg.dynamics.k_neighbors == 5);
  CHECK(cfg.acquisition.attenuation == Attenuation::inverted);
  CHECK(cfg.division.variant == DivisionVariant::count_coupled_oldest);
  CHECK_THROWS(apply_override(doc, "novalue"));

  const json materialized = config_to_json(cfg);
  CHECK(materialized["dynamics"]["K"] == 5);
  CHECK(materialized["dynamics"]["w_nna"] == 0.1);
  CHECK(config_to_json(config_from_json(materialized)) == materialized);
}

TEST_CASE("config file paths resolve against the config directory") {
  const auto dir = oracle::scratch_dir("config_paths");
  write_text(dir / "c.json", R"({"guide": {"file": "g.csv"}, "videos": {"directory": "vids"}})");
  const auto cfg = parse_config(dir / "c.json", {"seed=9"});
  CHECK(cfg.seed == 9);
  CHECK(cfg.resolve(std::get<GuideFile>(cfg.guide).path) == dir / "g.csv");
  write_text(dir / "bad.json", "{ nope");
  CHECK_THROWS_AS(parse_config(dir / "bad.json"), ParseError);
  CHECK_THROWS(parse_config(dir / "missing.json"));
}

TEST_CASE("frame range parsing") {
  CHECK(parse_frame_range("0..9") == FrameRange{0, 9});
  CHECK(parse_frame_range("3..3") == FrameRange{3, 3});
  CHECK_THROWS(parse_frame_range("5..2"));
  CHECK_THROWS(parse_frame_range("5"));
  CHECK_THROWS(parse_frame_range("a..b"));
}

TEST_CASE("object table round trip") {
  const auto dir = oracle::scratch_dir("table");
  const auto rows = random_records(1000, 1);
  write_object_table(rows, dir / "t.csv");
  CHECK(read_object_table(dir / "t.csv") == rows);

  write_object_table({}, dir / "empty.csv");
  CHECK(read_text(dir / "empty.csv") == std::string(kObjectTableHeader) + "\n");
  CHECK(read_object_table(dir / "empty.csv").empty());
}

TEST_CASE("object table validation") {
  const auto dir = oracle::scratch_dir("table_bad");
  const std::string h = std::string(kObjectTableHeader) + "\n";
  write_text(dir / "later_parent.csv",
             h + "0,1,,0,0,0,0,0,0,8,1,30,1,10,0\n" + "0,2,5,0,0,0,0,0,0,8,1,30,1,10,0\n" +
                 "0,5,,0,0,0,0,0,0,8,1,30,1,10,0\n");
  CHECK_THROWS_AS(read_object_table(dir / "later_parent.csv"), ValidationError);

  write_text(dir / "same_frame.csv",
             h + "0,1,,0,0,0,0,0,0,8,1,30,1,10,0\n" + "0,2,1,0,0,0,0,0,0,8,1,30,1,10,0\n");
  CHECK_THROWS_AS(read_object_table(dir / "same_frame.csv"), ValidationError);

  write_text(dir / "dup.csv",
             h + "0,1,,0,0,0,0,0,0,8,1,30,1,10,0\n" + "0,1,,0,0,0,0,0,0,8,1,30,1,10,0\n");
  CHECK_THROWS_AS(read_object_table(dir / "dup.csv"), ValidationError);

  write_text(dir / "header.csv", "frame,id\n");
  CHECK_THROWS_AS(read_object_table(dir / "header.csv"), ParseError);

  write_text(dir / "short.csv", h + "0,1,,0,0\n");
  CHECK_THROWS_WITH_AS(read_object_table(dir / "short.csv"), doctest::Contains(":2:"), ParseError);

  write_text(dir / "ok.csv",
             h + "0,1,,0,0,0,0,0,0,8,1,30,1,10,0\n" + "1,2,1,0,0,0,0,0,0,8,1,30,1,10,1\n");
  const auto rows = read_object_table(dir / "ok.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].parent_id == 1);
  CHECK(rows[1].clipped);
  CHECK_THROWS(read_object_table(dir / "missing.csv"));
}

TEST_CASE("object records and simulation objects") {
  VolumeSpec spec{{10, 10, 10}, {1, 1, 2}, {-5, 0, 0}};
  std::vector<SimObject> objs(2);
  objs[0].id = 1;
  objs[0].position = {1, 2, 4};
  objs[0].radius = 8;
  objs[0].cycle_length = 30;
  objs[0].cycle_state = 4;
  objs[0].video_id = 2;
  objs[1] = objs[0];
  objs[1].id = 7;
  objs[1].parent_id = 1;
  const auto rows = records_from_objects(3, objs, spec);
  CHECK(rows[0].voxel == Vec3{6, 2, 2});
  CHECK(rows[1].frame == 3);
  const auto back = objects_from_records(rows);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].id == objs[i].id);
    CHECK(back[i].parent_id == objs[i].parent_id);
    CHECK(back[i].position == objs[i].position);
    CHECK(back[i].radius == objs[i].radius);
    CHECK(back[i].cycle_state == objs[i].cycle_state);
    CHECK(back[i].cycle_length == objs[i].cycle_length);
    CHECK(back[i].video_id == objs[i].video_id);
  }
}

TEST_CASE("nrrd round trip") {
  const auto dir = oracle::scratch_dir("nrrd");
  CountVolume v({32, 32, 32}, {0.1, 0.3, 2.0 / 3.0});
  std::mt19937_64 gen(5);
  for (auto& x : v.data()) x = static_cast<std::uint16_t>(gen());
  write_volume(v, dir / "v.nrrd");
  const auto back = read_volume<std::uint16_t>(dir / "v.nrrd");
  CHECK(back == v);
  CHECK(back.spacing() == v.spacing());
  CHECK(fs::file_size(dir / "v.raw") == 32u * 32 * 32 * 2);
  const auto header = read_nrrd_header(dir / "v.nrrd");
  CHECK(header.type == NrrdType::uint16);
  CHECK(header.dims == Dims{32, 32, 32});

  Volume<float> f({5, 4, 3}, {1, 1, 1});
  for (auto& x : f.data()) x = std::uniform_real_distribution<float>(-1e6f, 1e6f)(gen);
  write_volume(f, dir / "f.nrrd");
  CHECK(read_volume<float>(dir / "f.nrrd") == f);
  // sample type converts on read
  const auto as_double = read_volume<double>(dir / "f.nrrd");
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(as_double[i] == static_cast<double>(f[i]));

  MaskVolume m({3, 3, 3}, {1, 1, 1}, 1);
  write_volume(m, dir / "m.nrrd");
  CHECK(read_volume<std::uint8_t>(dir / "m.nrrd") == m);
}

TEST_CASE("nrrd corruption") {
  const auto dir = oracle::scratch_dir("nrrd_bad");
  CountVolume v({8, 8, 8}, {1, 1, 1}, 7);
  write_volume(v, dir / "v.nrrd");
  fs::resize_file(dir / "v.raw", 8 * 8 * 8 * 2 - 2);
  CHECK_THROWS_AS(read_volume<std::uint16_t>(dir / "v.nrrd"), ValidationError);

  write_volume(v, dir / "w.nrrd");
  std::string h = read_text(dir / "w.nrrd");
  const auto pos = h.find("sizes: 8 8 8");
  REQUIRE(pos != std::string::npos);
  h.replace(pos, 12, "sizes: 8 8 9");
  write_text(dir / "w.nrrd", h);
  CHECK_THROWS_AS(read_volume<std::uint16_t>(dir / "w.nrrd"), ValidationError);

  write_text(dir / "x.nrrd", "hello\n");
  CHECK_THROWS_AS(read_volume<std::uint16_t>(dir / "x.nrrd"), ParseError);
  CHECK_THROWS(read_volume<std::uint16_t>(dir / "absent.nrrd"));
}

TEST_CASE("run log round trip") {
  RunLog log;
  log.initial_embryo = 300;
  log.initial_sim = 150;
  StepReport s;
  s.frame = 1;
  s.n_embryo = 304;
  s.n_sim_before = 150;
  s.n_sim_after = 152;
  s.divisions_requested = 2;
  s.divisions_performed = 1;
  s.shortfall = 1;
  s.divisions = {{17, 151, 152}};
  log.steps.push_back(s);
  const auto dir = oracle::scratch_dir("runlog");
  write_run_log(log, dir / "run.log");
  const auto back = read_run_log(dir / "run.log");
  CHECK(back.initial_embryo == 300);
  CHECK(back.initial_sim == 150);
  REQUIRE(back.steps.size() == 1);
  CHECK(back.steps[0].n_sim_after == 152);
  CHECK(back.steps[0].shortfall == 1);
  REQUIRE(back.steps[0].divisions.size() == 1);
  CHECK(back.steps[0].divisions[0].daughter_b == 152);
  const std::string text = read_text(dir / "run.log");
  CHECK(text.find("division frame=1 mother=17 daughters=151,152") != std::string::npos);
}

TEST_CASE("manifest") {
  const auto dir = oracle::scratch_dir("manifest");
  fs::create_directories(dir / "sub");
  write_text(dir / "a.txt", "alpha");
  write_text(dir / "sub" / "b.txt", "beta");
  auto cfg = config_from_json(minimal_doc());
  cfg.output = dir;
  write_manifest(cfg, dir);
  auto first = read_manifest(dir);
  write_manifest(cfg, dir);
  auto second = read_manifest(dir);
  first.erase("created");
  second.erase("created");
  CHECK(first == second);

  CHECK(first["tool"] == "embryosim");
  CHECK(first["seed"] == 3);
  CHECK_FALSE(first["config"].contains("output"));
  CHECK(first["config"]["dynamics"]["K"] == 10);
  const auto& files = first["files"];
  CHECK(files.size() == 2);
  CHECK(files.contains("a.txt"));
  CHECK(files.contains("sub/b.txt"));
  // SHA-256 of "alpha"
  CHECK(file_checksum(dir / "a.txt") ==
        "8ed3f6ad685b959ead7022518e1af76cd816f8e8ec7ccdda1ed4018e8f2223f8");
  CHECK(verify_manifest(dir).empty());

  write_text(dir / "a.txt", "alphA");
  CHECK(verify_manifest(dir) == std::vector<std::string>{"a.txt"});
  write_text(dir / "c.txt", "new");
  CHECK(verify_manifest(dir).size() == 2);
}
