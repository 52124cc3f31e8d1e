#pragma once

#include "colotk/io/json_io.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace colotk {

std::uint64_t fnv1a_file_hash(const std::filesystem::path& path);
std::string hash_hex(std::uint64_t hash);

/// Bookkeeping record written next to every subcommand's outputs.
struct RunManifest {
  std::string tool_version;
  std::string subcommand;
  io::json config;
  io::json input_hashes;  // path -> hex hash
  std::vector<std::string> outputs;
  double wall_clock_s = 0.0;
  std::uint64_t seed = 0;

  void add_input(const std::filesystem::path& path);
  io::json to_json() const;
  void save(const std::filesystem::path& path) const;
};

struct FormatCheck {
  std::string path;
  std::string kind;  // pfm / png / jsonl / ply / json
  bool ok = false;
  bool warning = false;
  std::string message;
};

/// Checks PFM/PNG/JSONL/PLY/JSON files under dir against their format rules.
/// Report-only: never throws on malformed content.
std::vector<FormatCheck> validate_formats(const std::filesystem::path& dir);

}  // namespace colotk
