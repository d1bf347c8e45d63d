#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "embryosim/config.hpp"

namespace embryosim {

inline constexpr const char* kToolName = "embryosim";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kManifestName = "manifest.json";

// Hex SHA-256 of a file's bytes.
std::string file_checksum(const std::filesystem::path& path);

// Checksums of every regular file below `dir` (relative, '/'-separated
// paths), excluding the manifest itself.
std::map<std::string, std::string> directory_checksums(const std::filesystem::path& dir);

// Writes <dir>/manifest.json with the resolved config, seed, tool version,
// creation time and one checksum per emitted file.
void write_manifest(const SimulationConfig& cfg, const std::filesystem::path& dir);

nlohmann::json read_manifest(const std::filesystem::path& dir);

// Files whose current checksum differs from the manifest, plus files missing
// on either side.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

}  // namespace embryosim
