#include "embryosim/acquisition.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <mutex>
#include <numeric>

#include "embryosim/errors.hpp"
#include "embryosim/rng.hpp"

namespace embryosim {
namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw std::bad_alloc();
  std::memset(static_cast<void*>(p), 0, sizeof(T) * n);
  return FftwBuffer<T>(p);
}

class Plan {
 public:
  explicit Plan(fftw_plan p) : plan_(p) {
    if (plan_ == nullptr) throw std::runtime_error("FFTW plan creation failed");
  }
  ~Plan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  fftw_plan get() const { return plan_; }

 private:
  fftw_plan plan_;
};

}  // namespace

std::string to_string(Attenuation a) {
  switch (a) {
    case Attenuation::none:
      return "none";
    case Attenuation::forward:
      return "forward";
    case Attenuation::inverted:
      return "inverted";
  }
  return "?";
}

Attenuation attenuation_from_string(const std::string& s) {
  if (s == "none") return Attenuation::none;
  if (s == "forward") return Attenuation::forward;
  if (s == "inverted") return Attenuation::inverted;
  throw ValidationError("acquisition.attenuation must be none, forward or inverted (got '" + s +
                        "')");
}

void validate(const AcquisitionConfig& cfg) {
  if (cfg.psf.empty()) throw ValidationError("acquisition: psf missing");
  double sum = 0.0;
  for (double v : cfg.psf.data()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError("acquisition: psf must be finite and non-negative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ValidationError("acquisition: psf must sum to 1 (sums to " + std::to_string(sum) + ")");
  }
  if (!(cfg.dark_offset >= 0.0)) throw ValidationError("acquisition.dark_offset must be >= 0");
  if (!(cfg.sigma_agn >= 0.0)) throw ValidationError("acquisition.sigma_agn must be >= 0");
  if (cfg.bits < 1 || cfg.bits > 16) throw ValidationError("acquisition.bits must be in [1, 16]");
  if (cfg.dark_image) {
    for (double v : cfg.dark_image->data()) {
      if (!(v >= 0.0)) throw ValidationError("acquisition: dark image must be non-negative");
    }
  }
}

double attenuation_factor(int z, int depth, Attenuation mode) {
  switch (mode) {
    case Attenuation::none:
      return 1.0;
    case Attenuation::forward:
      return 1.0 - static_cast<double>(z) / (depth - 1);
    case Attenuation::inverted:
      return static_cast<double>(z) / (depth - 1);
  }
  return 1.0;
}

RealVolume attenuate(const RealVolume& v, Attenuation mode) {
  const Dims d = v.dims();
  if (mode != Attenuation::none && d.z < 2) {
    throw std::invalid_argument("attenuate: needs at least 2 slices");
  }
  RealVolume out = v;
  const std::size_t slice = static_cast<std::size_t>(d.x) * d.y;
  for (int z = 0; z < d.z; ++z) {
    const double f = attenuation_factor(z, d.z, mode);
    for (std::size_t i = z * slice; i < (z + 1) * slice; ++i) out[i] *= f;
  }
  return out;
}

RealVolume rotate_180(const RealVolume& v) {
  RealVolume out(v.dims(), v.spacing());
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) out[n - 1 - i] = v[i];
  return out;
}

RealVolume convolve_psf(const RealVolume& v, const RealVolume& psf) {
  const Dims d = v.dims();
  const Dims k = psf.dims();
  if (k.x > d.x || k.y > d.y || k.z > d.z) {
    throw std::invalid_argument("convolve_psf: psf larger than volume");
  }
  const Dims p{d.x + k.x - 1, d.y + k.y - 1, d.z + k.z - 1};
  const std::size_t real_n = p.voxels();
  const std::size_t half_x = static_cast<std::size_t>(p.x / 2 + 1);
  const std::size_t complex_n = static_cast<std::size_t>(p.z) * p.y * half_x;

  auto real = fftw_buffer<double>(real_n);
  auto spec_v = fftw_buffer<fftw_complex>(complex_n);
  auto spec_k = fftw_buffer<fftw_complex>(complex_n);

  std::unique_ptr<Plan> forward, backward;
  {
    std::lock_guard lock(fftw_planner_mutex());
    forward = std::make_unique<Plan>(
        fftw_plan_dft_r2c_3d(p.z, p.y, p.x, real.get(), spec_v.get(), FFTW_ESTIMATE));
    backward = std::make_unique<Plan>(
        fftw_plan_dft_c2r_3d(p.z, p.y, p.x, spec_v.get(), real.get(), FFTW_ESTIMATE));
  }
  auto padded = [&](std::size_t x, std::size_t y, std::size_t z) {
    return (z * p.y + y) * static_cast<std::size_t>(p.x) + x;
  };

  for (int z = 0; z < k.z; ++z)
    for (int y = 0; y < k.y; ++y)
      for (int x = 0; x < k.x; ++x) real[padded(x, y, z)] = psf.at(x, y, z);
  fftw_execute_dft_r2c(forward->get(), real.get(), spec_k.get());

  std::fill(real.get(), real.get() + real_n, 0.0);
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x) real[padded(x, y, z)] = v.at(x, y, z);
  fftw_execute_dft_r2c(forward->get(), real.get(), spec_v.get());

  const double scale = 1.0 / static_cast<double>(real_n);
  for (std::size_t i = 0; i < complex_n; ++i) {
    const double re = spec_v[i][0] * spec_k[i][0] - spec_v[i][1] * spec_k[i][1];
    const double im = spec_v[i][0] * spec_k[i][1] + spec_v[i][1] * spec_k[i][0];
    spec_v[i][0] = re * scale;
    spec_v[i][1] = im * scale;
  }
  fftw_execute_dft_c2r(backward->get(), spec_v.get(), real.get());

  RealVolume out(d, v.spacing());
  const int cx = k.x / 2, cy = k.y / 2, cz = k.z / 2;
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x) out.at(x, y, z) = real[padded(x + cx, y + cy, z + cz)];
  return out;
}

RealVolume add_dark_current(const RealVolume& v, double offset) {
  if (!(offset >= 0.0)) throw std::invalid_argument("add_dark_current: negative offset");
  RealVolume out = v;
  for (auto& x : out.data()) x += offset;
  return out;
}

RealVolume add_dark_current(const RealVolume& v, const RealVolume& dark) {
  if (dark.dims() != v.dims()) {
    throw std::invalid_argument("add_dark_current: dark image dimensions differ from volume");
  }
  RealVolume out = v;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += dark[i];
  return out;
}

RealVolume apply_shot_noise(const RealVolume& v, const NoiseKey& key) {
  for (double x : v.data()) {
    if (x < 0.0) throw std::domain_error("apply_shot_noise: negative voxel value");
  }
  RealVolume out = v;
  const Dims d = v.dims();
  const std::size_t slice = static_cast<std::size_t>(d.x) * d.y;
  for (int z = 0; z < d.z; ++z) {
    RandomStream rng(key.seed, StreamPurpose::shot_noise, key.frame, key.view,
                     static_cast<std::uint64_t>(z));
    for (std::size_t i = z * slice; i < (z + 1) * slice; ++i) {
      out[i] = static_cast<double>(rng.poisson(out[i]));
    }
  }
  return out;
}

RealVolume add_gaussian_noise(const RealVolume& v, double sigma, const NoiseKey& key) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("add_gaussian_noise: negative sigma");
  if (sigma == 0.0) return v;
  RealVolume out = v;
  const Dims d = v.dims();
  const std::size_t slice = static_cast<std::size_t>(d.x) * d.y;
  for (int z = 0; z < d.z; ++z) {
    RandomStream rng(key.seed, StreamPurpose::read_noise, key.frame, key.view,
                     static_cast<std::uint64_t>(z));
    std::normal_distribution<double> dist(0.0, sigma);
    for (std::size_t i = z * slice; i < (z + 1) * slice; ++i) {
      out[i] = std::max(0.0, out[i] + dist(rng.engine()));
    }
  }
  return out;
}

CountVolume quantize(const RealVolume& v, int bits) {
  const double top = std::ldexp(1.0, bits) - 1.0;
  CountVolume out(v.dims(), v.spacing());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double c = std::clamp(v[i], 0.0, top);
    out[i] = static_cast<std::uint16_t>(std::floor(c + 0.5));
  }
  return out;
}

RealVolume gaussian_psf(double sigma_xy, double sigma_z, Vec3 spacing) {
  if (!(sigma_xy > 0.0 && sigma_z > 0.0)) {
    throw std::invalid_argument("gaussian_psf: sigmas must be positive");
  }
  const int hxy = static_cast<int>(std::ceil(4.0 * sigma_xy));
  const int hz = static_cast<int>(std::ceil(4.0 * sigma_z));
  RealVolume psf(Dims{2 * hxy + 1, 2 * hxy + 1, 2 * hz + 1}, spacing);
  double sum = 0.0;
  for (int z = -hz; z <= hz; ++z)
    for (int y = -hxy; y <= hxy; ++y)
      for (int x = -hxy; x <= hxy; ++x) {
        const double e = (x * x + y * y) / (2.0 * sigma_xy * sigma_xy) +
                         (z * z) / (2.0 * sigma_z * sigma_z);
        const double w = std::exp(-e);
        psf.at(x + hxy, y + hxy, z + hz) = w;
        sum += w;
      }
  for (auto& w : psf.data()) w /= sum;
  return psf;
}

std::vector<CountVolume> acquire(const RealVolume& raw, const AcquisitionConfig& cfg,
                                 std::uint64_t seed, std::uint64_t frame) {
  validate(cfg);
  auto one_view = [&](Attenuation attenuation, const RealVolume& psf, std::uint64_t view) {
    RealVolume v = attenuate(raw, attenuation);
    v = convolve_psf(v, psf);
    for (auto& x : v.data()) x = std::max(0.0, x);  // FFT round-off below zero
    v = cfg.dark_image ? add_dark_current(v, *cfg.dark_image) : add_dark_current(v, cfg.dark_offset);
    const NoiseKey key{seed, frame, view};
    if (cfg.shot_noise) v = apply_shot_noise(v, key);
    v = add_gaussian_noise(v, cfg.sigma_agn, key);
    return quantize(v, cfg.bits);
  };

  std::vector<CountVolume> views;
  views.push_back(one_view(cfg.attenuation, cfg.psf, 0));
  if (cfg.multiview) {
    const Attenuation second = cfg.attenuation == Attenuation::forward    ? Attenuation::inverted
                               : cfg.attenuation == Attenuation::inverted ? Attenuation::forward
                                                                          : Attenuation::none;
    views.push_back(one_view(second, rotate_180(cfg.psf), 1));
  }
  return views;
}

}  // namespace embryosim
