#include "embryosim/run_log.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "embryosim/errors.hpp"

namespace embryosim {

void write_run_log(const RunLog& log, std::ostream& out) {
  out << "init frame=0 n_embryo=" << log.initial_embryo << " n_sim=" << log.initial_sim << '\n';
  for (const auto& s : log.steps) {
    out << "frame " << s.frame << " n_embryo=" << s.n_embryo << " n_sim_before=" << s.n_sim_before
        << " requested=" << s.divisions_requested << " performed=" << s.divisions_performed
        << " shortfall=" << s.shortfall << " n_sim=" << s.n_sim_after << '\n';
    for (const auto& d : s.divisions) {
      out << "division frame=" << s.frame << " mother=" << d.mother << " daughters="
          << d.daughter_a << ',' << d.daughter_b << '\n';
    }
  }
}

void write_run_log(const RunLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write run log " + path.string());
  write_run_log(log, out);
}

RunLog read_run_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run log " + path.string());
  RunLog log;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&] { throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed"); };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("init ", 0) == 0) {
      if (std::sscanf(line.c_str(), "init frame=0 n_embryo=%zu n_sim=%zu", &log.initial_embryo,
                      &log.initial_sim) != 2) {
        fail();
      }
    } else if (line.rfind("frame ", 0) == 0) {
      StepReport s;
      if (std::sscanf(line.c_str(),
                      "frame %d n_embryo=%zu n_sim_before=%zu requested=%d performed=%d "
                      "shortfall=%d n_sim=%zu",
                      &s.frame, &s.n_embryo, &s.n_sim_before, &s.divisions_requested,
                      &s.divisions_performed, &s.shortfall, &s.n_sim_after) != 7) {
        fail();
      }
      log.steps.push_back(s);
    } else if (line.rfind("division ", 0) == 0) {
      int frame = 0;
      long long m = 0, a = 0, b = 0;
      if (std::sscanf(line.c_str(), "division frame=%d mother=%lld daughters=%lld,%lld", &frame,
                      &m, &a, &b) != 4 ||
          log.steps.empty() || log.steps.back().frame != frame) {
        fail();
      }
      log.steps.back().divisions.push_back({m, a, b});
    } else {
      fail();
    }
  }
  return log;
}

}  // namespace embryosim
