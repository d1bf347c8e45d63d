#pragma once

#include <filesystem>
#include <string>

#include "embryosim/volume.hpp"

namespace embryosim {

enum class NrrdType { uint8, uint16, uint32, float32, float64 };

std::string to_string(NrrdType t);
std::size_t byte_size(NrrdType t);

struct NrrdHeader {
  NrrdType type = NrrdType::uint16;
  Dims dims;
  Vec3 spacing{1.0, 1.0, 1.0};
  std::filesystem::path data_file;  // resolved against the header's directory
};

// Detached-header NRRD: `path` receives the text header and a sibling file
// with the same stem and a `.raw` extension receives little-endian samples.
template <typename T>
void write_volume(const Volume<T>& v, const std::filesystem::path& path);

// Reads any supported sample type and converts to T. Throws ParseError on a
// malformed header and ValidationError when the data length disagrees.
template <typename T>
Volume<T> read_volume(const std::filesystem::path& path);

NrrdHeader read_nrrd_header(const std::filesystem::path& path);

}  // namespace embryosim
