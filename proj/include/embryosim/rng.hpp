#pragma once

#include <cstdint>
#include <random>

#include "embryosim/vec3.hpp"

namespace embryosim {

// Purpose tags for stream derivation. Every random draw in a run comes from a
// stream keyed by (master seed, purpose, up to three counters), so the values
// an object or a voxel slice receives never depend on evaluation order or on
// the number of worker threads.
enum class StreamPurpose : std::uint64_t {
  initial_selection = 1,
  object_attributes = 2,
  contact_direction = 3,
  division_axis = 4,
  shot_noise = 5,
  read_noise = 6,
  guide_generator = 7,
  video_generator = 8,
  test = 99,
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_stream_seed(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0);

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a = 0, std::uint64_t b = 0,
               std::uint64_t c = 0)
      : engine_(derive_stream_seed(seed, purpose, a, b, c)) {}

  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Inclusive integer range, unbiased by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  Vec3 unit_vector();
  double normal(double mean, double sigma);
  std::int64_t poisson(double mean);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace embryosim
