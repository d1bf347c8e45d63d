#include "embryosim/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "embryosim/errors.hpp"

namespace embryosim {

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::map<std::string, std::string> directory_checksums(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = std::filesystem::relative(entry.path(), dir).generic_string();
    if (rel == kManifestName) continue;
    out.emplace(rel, file_checksum(entry.path()));
  }
  return out;
}

void write_manifest(const SimulationConfig& cfg, const std::filesystem::path& dir) {
  nlohmann::json m;
  m["tool"] = kToolName;
  m["version"] = kToolVersion;
  m["seed"] = cfg.seed;
  auto resolved = config_to_json(cfg);
  resolved.erase("output");  // where the files went is not part of the run
  m["config"] = resolved;
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::ostringstream ts;
  ts << std::put_time(std::gmtime(&t), "%Y-%m-%dT%H:%M:%SZ");
  m["created"] = ts.str();
  m["files"] = directory_checksums(dir);

  std::ofstream out(dir / kManifestName, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << m.dump(2) << '\n';
}

nlohmann::json read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestName);
  if (!in) throw std::runtime_error("no manifest in " + dir.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError((dir / kManifestName).string() + ": invalid JSON");
  return j;
}

std::vector<std::string> verify_manifest(const std::filesystem::path& dir) {
  const auto manifest = read_manifest(dir);
  const auto recorded = manifest.at("files").get<std::map<std::string, std::string>>();
  const auto current = directory_checksums(dir);
  std::vector<std::string> bad;
  for (const auto& [name, sum] : recorded) {
    const auto it = current.find(name);
    if (it == current.end() || it->second != sum) bad.push_back(name);
  }
  for (const auto& [name, sum] : current) {
    if (!recorded.count(name)) bad.push_back(name);
  }
  return bad;
}

}  // namespace embryosim
