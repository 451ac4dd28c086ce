#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace dynmix::cli {

inline constexpr const char* kVersion = DYNMIX_VERSION;

struct InputDigest {
  std::string path;
  std::string sha256;
};

/// Record of one CLI run, written as manifest.json next to its outputs.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config;  // fully resolved options
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string started;   // ISO 8601 UTC
  std::string finished;  // ISO 8601 UTC
  std::vector<InputDigest> inputs;
};

/// Hex SHA-256 of a file's bytes. Throws FileError if it cannot be read.
std::string sha256_file(const std::filesystem::path& path);

std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now());

nlohmann::ordered_json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

void write_manifest(const std::filesystem::path& dir, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace dynmix::cli
