#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace roomlm {

/// Provenance record written next to every CLI output.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> flags;
  std::map<std::string, std::string> input_digests;  ///< path -> "fnv1a64:<hex>"
  std::string backend = "none";
  std::string template_version = "none";
  std::string timestamp;  ///< UTC, ISO 8601; honours SOURCE_DATE_EPOCH
  std::vector<std::string> outputs;

  void add_input(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
};

std::string digest_file(const std::filesystem::path& path);
/// 16 hex digits identifying `text`; used to name per-backend cache files.
std::string digest_string(std::string_view text);
std::string utc_timestamp();

}  // namespace roomlm
