#include "embryosim/nrrd.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <type_traits>

#include "embryosim/errors.hpp"
#include "embryosim/text.hpp"

namespace embryosim {
namespace {

static_assert(std::endian::native == std::endian::little,
              "raw NRRD I/O assumes a little-endian host");

template <typename T>
constexpr NrrdType nrrd_type_of() {
  if constexpr (std::is_same_v<T, std::uint8_t>) return NrrdType::uint8;
  if constexpr (std::is_same_v<T, std::uint16_t>) return NrrdType::uint16;
  if constexpr (std::is_same_v<T, std::uint32_t>) return NrrdType::uint32;
  if constexpr (std::is_same_v<T, float>) return NrrdType::float32;
  if constexpr (std::is_same_v<T, double>) return NrrdType::float64;
}

NrrdType parse_type(const std::string& s) {
  if (s == "uint8" || s == "uchar" || s == "unsigned char") return NrrdType::uint8;
  if (s == "uint16" || s == "ushort" || s == "unsigned short") return NrrdType::uint16;
  if (s == "uint32" || s == "uint" || s == "unsigned int") return NrrdType::uint32;
  if (s == "float32" || s == "float") return NrrdType::float32;
  if (s == "float64" || s == "double") return NrrdType::float64;
  throw ParseError("unsupported NRRD type '" + s + "'");
}

std::filesystem::path data_path_for(const std::filesystem::path& header) {
  auto p = header;
  p.replace_extension(".raw");
  return p;
}

template <typename Stored, typename T>
void convert_into(const std::vector<char>& bytes, std::vector<T>& out) {
  const std::size_t n = bytes.size() / sizeof(Stored);
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Stored s;
    std::memcpy(&s, bytes.data() + i * sizeof(Stored), sizeof(Stored));
    out[i] = static_cast<T>(s);
  }
}

}  // namespace

std::string to_string(NrrdType t) {
  switch (t) {
    case NrrdType::uint8:
      return "uint8";
    case NrrdType::uint16:
      return "uint16";
    case NrrdType::uint32:
      return "uint32";
    case NrrdType::float32:
      return "float";
    case NrrdType::float64:
      return "double";
  }
  return "?";
}

std::size_t byte_size(NrrdType t) {
  switch (t) {
    case NrrdType::uint8:
      return 1;
    case NrrdType::uint16:
      return 2;
    case NrrdType::uint32:
    case NrrdType::float32:
      return 4;
    case NrrdType::float64:
      return 8;
  }
  return 0;
}

template <typename T>
void write_volume(const Volume<T>& v, const std::filesystem::path& path) {
  const auto data_path = data_path_for(path);
  {
    std::ofstream h(path, std::ios::binary);
    if (!h) throw std::runtime_error("cannot write " + path.string());
    const auto& d = v.dims();
    const auto& s = v.spacing();
    h << "NRRD0004\n"
      << "type: " << to_string(nrrd_type_of<T>()) << '\n'
      << "dimension: 3\n"
      << "sizes: " << d.x << ' ' << d.y << ' ' << d.z << '\n'
      << "spacings: " << text::format_double(s.x) << ' ' << text::format_double(s.y) << ' '
      << text::format_double(s.z) << '\n'
      << "encoding: raw\n"
      << "endian: little\n"
      << "data file: " << data_path.filename().string() << '\n';
    if (!h) throw std::runtime_error("failed writing " + path.string());
  }
  std::ofstream raw(data_path, std::ios::binary);
  if (!raw) throw std::runtime_error("cannot write " + data_path.string());
  raw.write(reinterpret_cast<const char*>(v.data().data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
  if (!raw) throw std::runtime_error("failed writing " + data_path.string());
}

NrrdHeader read_nrrd_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("NRRD", 0) != 0) {
    throw ParseError(path.string() + ": missing NRRD magic");
  }
  NrrdHeader h;
  bool have_type = false, have_sizes = false, have_dim = false, have_data = false;
  bool have_spacings = false;
  auto fail = [&](const std::string& what) { throw ParseError(path.string() + ": " + what); };

  while (std::getline(in, line)) {
    if (text::trim(line).empty()) break;  // attached data would follow; unsupported
    if (line[0] == '#') continue;
    const auto colon = line.find(": ");
    if (colon == std::string::npos) {
      if (line.find(":=") != std::string::npos) continue;  // key/value pairs
      fail("malformed header line '" + line + "'");
    }
    const std::string key = line.substr(0, colon);
    const std::string value(text::trim(std::string_view(line).substr(colon + 2)));
    std::istringstream vs(value);
    if (key == "type") {
      h.type = parse_type(value);
      have_type = true;
    } else if (key == "dimension") {
      if (value != "3") fail("only 3-dimensional volumes are supported");
      have_dim = true;
    } else if (key == "sizes") {
      if (!(vs >> h.dims.x >> h.dims.y >> h.dims.z) || h.dims.x <= 0 || h.dims.y <= 0 ||
          h.dims.z <= 0) {
        fail("bad sizes");
      }
      have_sizes = true;
    } else if (key == "spacings") {
      const auto parts = text::split(value, ' ');
      if (parts.size() != 3) fail("bad spacings");
      for (int a = 0; a < 3; ++a) {
        if (!text::parse_double(parts[a], h.spacing[a]) || !(h.spacing[a] > 0.0)) {
          fail("bad spacings");
        }
      }
      have_spacings = true;
    } else if (key == "encoding") {
      if (value != "raw") fail("only raw encoding is supported");
    } else if (key == "endian") {
      if (value != "little") fail("only little endian data is supported");
    } else if (key == "data file" || key == "datafile") {
      h.data_file = path.parent_path() / value;
      have_data = true;
    }
  }
  if (!have_type || !have_sizes || !have_dim || !have_data) {
    fail("header must define type, dimension, sizes and data file");
  }
  if (!have_spacings) fail("header must define spacings");
  return h;
}

template <typename T>
Volume<T> read_volume(const std::filesystem::path& path) {
  const NrrdHeader h = read_nrrd_header(path);
  std::ifstream raw(h.data_file, std::ios::binary | std::ios::ate);
  if (!raw) throw std::runtime_error("cannot open data file " + h.data_file.string());
  const auto length = static_cast<std::size_t>(raw.tellg());
  const std::size_t expected = h.dims.voxels() * byte_size(h.type);
  if (length != expected) {
    throw ValidationError(path.string() + ": header implies " + std::to_string(expected) +
                          " bytes but " + h.data_file.filename().string() + " has " +
                          std::to_string(length));
  }
  raw.seekg(0);
  std::vector<char> bytes(length);
  raw.read(bytes.data(), static_cast<std::streamsize>(length));
  if (!raw) throw std::runtime_error("failed reading " + h.data_file.string());

  std::vector<T> data;
  switch (h.type) {
    case NrrdType::uint8:
      convert_into<std::uint8_t>(bytes, data);
      break;
    case NrrdType::uint16:
      convert_into<std::uint16_t>(bytes, data);
      break;
    case NrrdType::uint32:
      convert_into<std::uint32_t>(bytes, data);
      break;
    case NrrdType::float32:
      convert_into<float>(bytes, data);
      break;
    case NrrdType::float64:
      convert_into<double>(bytes, data);
      break;
  }
  return Volume<T>(h.dims, h.spacing, std::move(data));
}

template void write_volume(const Volume<std::uint8_t>&, const std::filesystem::path&);
template void write_volume(const Volume<std::uint16_t>&, const std::filesystem::path&);
template void write_volume(const Volume<std::uint32_t>&, const std::filesystem::path&);
template void write_volume(const Volume<float>&, const std::filesystem::path&);
template void write_volume(const Volume<double>&, const std::filesystem::path&);
template Volume<std::uint8_t> read_volume(const std::filesystem::path&);
template Volume<std::uint16_t> read_volume(const std::filesystem::path&);
template Volume<std::uint32_t> read_volume(const std::filesystem::path&);
template Volume<float> read_volume(const std::filesystem::path&);
template Volume<double> read_volume(const std::filesystem::path&);

}  // namespace embryosim
