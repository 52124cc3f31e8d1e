#include "colotk/io/ply.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace colotk::io {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error("ply: " + path.string() + ": " + what);
}

}  // namespace

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, bool ascii) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for writing");
  f << "ply\nformat " << (ascii ? "ascii" : "binary_little_endian") << " 1.0\n";
  f << "element vertex " << cloud.size() << "\n";
  f << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_colors())
    f << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (cloud.has_labels()) f << "property uchar label\n";
  f << "end_header\n";

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const float xyz[3] = {static_cast<float>(cloud.points[i].x()),
                          static_cast<float>(cloud.points[i].y()),
                          static_cast<float>(cloud.points[i].z())};
    if (ascii) {
      f << xyz[0] << " " << xyz[1] << " " << xyz[2];
      if (cloud.has_colors())
        f << " " << int(cloud.colors[i][0]) << " " << int(cloud.colors[i][1]) << " "
          << int(cloud.colors[i][2]);
      if (cloud.has_labels()) f << " " << int(cloud.labels[i]);
      f << "\n";
    } else {
      f.write(reinterpret_cast<const char*>(xyz), 12);
      if (cloud.has_colors()) f.write(reinterpret_cast<const char*>(cloud.colors[i].data()), 3);
      if (cloud.has_labels()) f.write(reinterpret_cast<const char*>(&cloud.labels[i]), 1);
    }
  }
  if (!f) fail(path, "write failed");
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open");
  std::string line;
  if (!std::getline(f, line) || line != "ply") fail(path, "missing ply magic");

  bool binary = false, ascii = false;
  std::size_t n_vertices = 0;
  std::vector<std::string> props;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      binary = fmt == "binary_little_endian";
      ascii = fmt == "ascii";
      if (!binary && !ascii) fail(path, "unsupported format " + fmt);
    } else if (tok == "element") {
      std::string name;
      ss >> name >> n_vertices;
      if (name != "vertex") fail(path, "unsupported element " + name);
    } else if (tok == "property") {
      std::string type, name;
      ss >> type >> name;
      props.push_back(name);
    } else if (tok == "end_header") {
      break;
    }
  }
  const bool has_rgb = props.size() >= 6 && props[3] == "red";
  const bool has_label = !props.empty() && props.back() == "label";
  const std::size_t expected = 3 + (has_rgb ? 3u : 0u) + (has_label ? 1u : 0u);
  if (props.size() != expected || props[0] != "x" || props[1] != "y" || props[2] != "z")
    fail(path, "unsupported property layout");

  PointCloud cloud;
  cloud.points.reserve(n_vertices);
  for (std::size_t i = 0; i < n_vertices; ++i) {
    float xyz[3];
    std::array<std::uint8_t, 3> rgb{};
    std::uint8_t label = 0;
    if (binary) {
      f.read(reinterpret_cast<char*>(xyz), 12);
      if (has_rgb) f.read(reinterpret_cast<char*>(rgb.data()), 3);
      if (has_label) f.read(reinterpret_cast<char*>(&label), 1);
    } else {
      int r = 0, g = 0, b = 0, l = 0;
      f >> xyz[0] >> xyz[1] >> xyz[2];
      if (has_rgb) f >> r >> g >> b;
      if (has_label) f >> l;
      rgb = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
             static_cast<std::uint8_t>(b)};
      label = static_cast<std::uint8_t>(l);
    }
    if (!f) fail(path, "truncated vertex data at index " + std::to_string(i));
    cloud.points.emplace_back(xyz[0], xyz[1], xyz[2]);
    if (has_rgb) cloud.colors.push_back(rgb);
    if (has_label) cloud.labels.push_back(label);
  }
  return cloud;
}

}  // namespace colotk::io
