#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "embryosim/dynamics.hpp"

namespace embryosim {

// Text log, one `frame` line per simulated step followed by one `division`
// line per division performed in it:
//
//   init frame=0 n_embryo=300 n_sim=150
//   frame 1 n_embryo=304 n_sim_before=150 requested=2 performed=2 shortfall=0 n_sim=152
//   division frame=1 mother=17 daughters=151,152
struct RunLog {
  std::size_t initial_embryo = 0;
  std::size_t initial_sim = 0;
  std::vector<StepReport> steps;
};

void write_run_log(const RunLog& log, std::ostream& out);
void write_run_log(const RunLog& log, const std::filesystem::path& path);
RunLog read_run_log(const std::filesystem::path& path);

}  // namespace embryosim
