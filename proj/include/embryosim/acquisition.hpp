#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "embryosim/volume.hpp"

namespace embryosim {

enum class Attenuation { none, forward, inverted };

std::string to_string(Attenuation a);
Attenuation attenuation_from_string(const std::string& s);

struct AcquisitionConfig {
  RealVolume psf;  // unit sum
  double dark_offset = 100.0;
  std::optional<RealVolume> dark_image;  // replaces the constant offset when set
  double sigma_agn = 5.0;
  bool shot_noise = true;
  Attenuation attenuation = Attenuation::forward;
  bool multiview = false;
  int bits = 16;
};

void validate(const AcquisitionConfig& cfg);

// Identifies the noise streams of one acquired frame. Streams are further
// split by view, stage and z slice.
struct NoiseKey {
  std::uint64_t seed = 0;
  std::uint64_t frame = 0;
  std::uint64_t view = 0;
};

// Slice z is scaled by 1 - z/(Z-1) (forward) or z/(Z-1) (inverted).
RealVolume attenuate(const RealVolume& v, Attenuation mode);
double attenuation_factor(int z, int depth, Attenuation mode);

// Index reversal along all three axes.
RealVolume rotate_180(const RealVolume& v);

// Linear convolution with zero padding, cropped to the input size; the kernel
// origin is at index dims/2 on each axis. Computed in the frequency domain.
RealVolume convolve_psf(const RealVolume& v, const RealVolume& psf);

RealVolume add_dark_current(const RealVolume& v, double offset);
RealVolume add_dark_current(const RealVolume& v, const RealVolume& dark);

RealVolume apply_shot_noise(const RealVolume& v, const NoiseKey& key);
// Adds N(0, sigma) per voxel and clamps the result at zero.
RealVolume add_gaussian_noise(const RealVolume& v, double sigma, const NoiseKey& key);

// Clamp to [0, 2^bits - 1], then round half up.
CountVolume quantize(const RealVolume& v, int bits = 16);

// Anisotropic Gaussian truncated at 4 sigma, unit sum. Sigmas in voxels.
RealVolume gaussian_psf(double sigma_xy, double sigma_z, Vec3 spacing = {1.0, 1.0, 1.0});

// attenuate -> convolve -> dark current -> shot noise -> read noise ->
// quantize. With multiview, a second view uses the inverted ramp, the rotated
// PSF and independent noise streams.
std::vector<CountVolume> acquire(const RealVolume& raw, const AcquisitionConfig& cfg,
                                 std::uint64_t seed, std::uint64_t frame);

}  // namespace embryosim
