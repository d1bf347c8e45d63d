#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "embryosim/vec3.hpp"

namespace embryosim {

struct Dims {
  int x = 0;
  int y = 0;
  int z = 0;

  std::size_t voxels() const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(y) * static_cast<std::size_t>(z);
  }
  int operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  friend bool operator==(const Dims&, const Dims&) = default;
};

// Dense 3D grid, x fastest. Spacing is µm per voxel.
template <typename T>
class Volume {
 public:
  using value_type = T;

  Volume() = default;
  Volume(Dims dims, Vec3 spacing, T fill = T{}) : dims_(dims), spacing_(spacing) {
    if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0) {
      throw std::invalid_argument("Volume: dimensions must be positive");
    }
    if (!(spacing.x > 0.0 && spacing.y > 0.0 && spacing.z > 0.0)) {
      throw std::invalid_argument("Volume: spacing must be positive");
    }
    data_.assign(dims.voxels(), fill);
  }
  Volume(Dims dims, Vec3 spacing, std::vector<T> data) : Volume(dims, spacing) {
    if (data.size() != dims.voxels()) {
      throw std::invalid_argument("Volume: data length does not match dimensions");
    }
    data_ = std::move(data);
  }

  const Dims& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t offset(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * static_cast<std::size_t>(dims_.y) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(dims_.x) +
           static_cast<std::size_t>(x);
  }
  bool in_bounds(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.x && y < dims_.y && z < dims_.z;
  }

  T& at(int x, int y, int z) { return data_[offset(x, y, z)]; }
  const T& at(int x, int y, int z) const { return data_[offset(x, y, z)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Dims dims_;
  Vec3 spacing_{1.0, 1.0, 1.0};
  std::vector<T> data_;
};

using RealVolume = Volume<double>;
using CountVolume = Volume<std::uint16_t>;
using LabelVolume = Volume<std::uint16_t>;
using MaskVolume = Volume<std::uint8_t>;

template <typename To, typename From>
Volume<To> convert_volume(const Volume<From>& v) {
  std::vector<To> data(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) data[i] = static_cast<To>(v[i]);
  return Volume<To>(v.dims(), v.spacing(), std::move(data));
}

}  // namespace embryosim
