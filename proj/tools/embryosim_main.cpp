// embryosim: command-line driver for the benchmark generator.

#include <CLI11.hpp>

#include <iostream>
#include <thread>

#include "embryosim/config.hpp"
#include "embryosim/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  int threads = 1;
  std::string frames;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "JSON configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out, "output directory (defaults to the config's output)");
  cmd->add_option("--set", args.overrides, "override a config value, e.g. dynamics.K=5")
      ->allow_extra_args(false);
  cmd->add_option("--threads", args.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--frames", args.frames, "frame range a..b");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-synthetic 3D+t fluorescence microscopy benchmark generator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "embryosim 1.0.0");

  using Runner = void (*)(const embryosim::SimulationConfig&, const std::filesystem::path&,
                          const embryosim::RunOptions&);
  struct Command {
    const char* name;
    const char* help;
    Runner run;
  };
  const Command commands[] = {
      {"full", "simulate, render, acquire and write everything", embryosim::run_full},
      {"simulate", "run the object simulation and write object tables", embryosim::run_simulate},
      {"render", "rasterize object tables into raw and label volumes", embryosim::run_render},
      {"acquire", "degrade raw volumes into final volumes", embryosim::run_acquire},
      {"make-guide", "write the procedural guide embryo as CSV", embryosim::run_make_guide},
      {"make-videos", "write the procedural object-video library", embryosim::run_make_videos},
  };

  CommonArgs args;
  std::vector<std::pair<CLI::App*, Runner>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, args);
    subs.emplace_back(sub, c.run);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = embryosim::parse_config(args.config, args.overrides);
    std::filesystem::path out = args.out;
    if (out.empty()) {
      if (!cfg.output) throw std::runtime_error("no output directory: pass --out or set output");
      out = cfg.resolve(*cfg.output);
    }
    embryosim::RunOptions options;
    options.threads = args.threads;
    options.progress = &std::cerr;
    if (!args.frames.empty()) options.frames = embryosim::parse_frame_range(args.frames);

    for (const auto& [sub, run] : subs) {
      if (sub->parsed()) run(cfg, out, options);
    }
  } catch (const std::exception& e) {
    std::cerr << "embryosim: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
