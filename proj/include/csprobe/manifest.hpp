#pragma once

// Run manifests: what was run, with which settings, on which bytes.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace csprobe {

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);

struct ManifestInput {
  std::string role;
  std::string path;
  std::string sha256;
};

// No timestamps or host details, so identical runs give identical bytes.
struct Manifest {
  std::string tool_version;
  std::string command;
  nlohmann::json config;  // effective settings after config file and flags
  std::vector<ManifestInput> inputs;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
};

}  // namespace csprobe
