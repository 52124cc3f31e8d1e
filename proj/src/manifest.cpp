#include "colotk/manifest.hpp"

#include "colotk/io/pfm.hpp"
#include "colotk/io/ply.hpp"
#include "colotk/io/png_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace colotk {

std::uint64_t fnv1a_file_hash(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("hash: cannot open " + path.string());
  std::uint64_t h = 14695981039346656037ULL;
  char buf[65536];
  while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
    const std::streamsize n = f.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!f) break;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  std::ostringstream ss;
  ss << std::hex << hash;
  return ss.str();
}

void RunManifest::add_input(const std::filesystem::path& path) {
  input_hashes[path.string()] = hash_hex(fnv1a_file_hash(path));
}

io::json RunManifest::to_json() const {
  return io::json{{"tool_version", tool_version}, {"subcommand", subcommand},
                  {"config", config},            {"input_hashes", input_hashes},
                  {"outputs", outputs},          {"wall_clock_s", wall_clock_s},
                  {"seed", seed}};
}

void RunManifest::save(const std::filesystem::path& path) const {
  io::save_json(path, to_json());
}

namespace {

FormatCheck check_file(const std::filesystem::path& path) {
  FormatCheck out;
  out.path = path.string();
  const std::string ext = path.extension().string();
  try {
    if (ext == ".pfm") {
      out.kind = "pfm";
      io::read_pfm(path);
      out.ok = true;
    } else if (ext == ".png") {
      out.kind = "png";
      const int depth = io::png_bit_depth(path);
      out.ok = true;
      if (depth == 16) {
        // 16-bit depth PNGs need a {mm_per_unit} sidecar to be metric.
        std::filesystem::path sidecar = path;
        sidecar.replace_extension(".json");
        if (!std::filesystem::exists(sidecar)) {
          out.warning = true;
          out.message = "16-bit PNG without mm_per_unit JSON sidecar";
        }
      }
    } else if (ext == ".jsonl") {
      out.kind = "jsonl";
      io::read_tracks_jsonl(path);
      out.ok = true;
    } else if (ext == ".ply") {
      out.kind = "ply";
      io::read_ply(path);
      out.ok = true;
    } else if (ext == ".json") {
      out.kind = "json";
      io::load_json(path);
      out.ok = true;
    } else {
      out.kind = "other";
      out.ok = true;
      out.warning = true;
      out.message = "unrecognized extension, skipped";
    }
  } catch (const std::exception& e) {
    out.ok = false;
    out.message = e.what();
  }
  return out;
}

}  // namespace

std::vector<FormatCheck> validate_formats(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw std::invalid_argument("validate_formats: not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<FormatCheck> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(check_file(f));
  return out;
}

}  // namespace colotk
