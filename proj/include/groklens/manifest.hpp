#pragma once

// Run manifest: resolved config, trial seeds, tool version, timestamps and a
// SHA-256 inventory of every file the run wrote.

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "groklens/config.hpp"
#include "groklens/error.hpp"

namespace groklens {

inline constexpr const char* kToolVersion = "groklens 1.0.0";

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 computation failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

inline std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_all(path)); }

inline std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now()) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ManifestEntry {
  std::string path;  // relative to the run directory
  std::uintmax_t bytes = 0;
  std::string sha256;
};

struct RunManifest {
  ExperimentConfig config;
  std::vector<TrialSeeds> seeds;
  std::string tool_version = kToolVersion;
  std::string started;
  std::string finished;
  std::vector<ManifestEntry> files;
};

/// Hashes every regular file below `dir` except manifest.json, sorted by path.
inline std::vector<ManifestEntry> inventory(const std::filesystem::path& dir) {
  std::vector<ManifestEntry> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    out.push_back({rel, e.file_size(), sha256_file(e.path())});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return out;
}

inline Json manifest_to_json(const RunManifest& m) {
  Json j;
  j["tool_version"] = m.tool_version;
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["config"] = config_to_json(m.config);
  Json seeds = Json::array();
  for (std::size_t t = 0; t < m.seeds.size(); ++t)
    seeds.push_back({{"trial", t}, {"data", m.seeds[t].data}, {"init", m.seeds[t].init}, {"shuffle", m.seeds[t].shuffle}});
  j["trial_seeds"] = seeds;
  Json files = Json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  j["files"] = files;
  return j;
}

inline void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest_to_json(m).dump(2) << '\n';
}

/// Paths whose current hash differs from the manifest, or that are missing.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& dir) {
  const auto j = Json::parse(read_all(dir / "manifest.json"));
  std::vector<std::string> bad;
  for (const auto& f : j.at("files")) {
    const auto rel = f.at("path").get<std::string>();
    const auto path = dir / rel;
    if (!std::filesystem::exists(path) || sha256_file(path) != f.at("sha256").get<std::string>()) bad.push_back(rel);
  }
  return bad;
}

}  // namespace groklens
