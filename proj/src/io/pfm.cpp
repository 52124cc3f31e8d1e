#include "colotk/io/pfm.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace colotk::io {

namespace {

void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error("pfm: " + path.string() + ": " + what);
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const DepthGrid& values) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for writing");
  f << "Pf\n" << values.cols() << " " << values.rows() << "\n-1.0\n";
  // Bottom-up row order.
  for (int r = static_cast<int>(values.rows()) - 1; r >= 0; --r)
    f.write(reinterpret_cast<const char*>(values.data() + static_cast<std::ptrdiff_t>(r) * values.cols()),
            static_cast<std::streamsize>(values.cols() * sizeof(float)));
  if (!f) fail(path, "write failed");
}

DepthFrame read_pfm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open");
  std::string magic;
  f >> magic;
  if (magic != "Pf") fail(path, "not a grayscale PFM (magic '" + magic + "')");
  int width = 0, height = 0;
  double scale = 0.0;
  f >> width >> height >> scale;
  if (!f || width < 1 || height < 1 || scale == 0.0) fail(path, "bad header");
  f.get();  // single whitespace after the scale line

  DepthFrame frame(height, width);
  std::vector<float> row(static_cast<std::size_t>(width));
  const bool file_little = scale < 0.0;
  const bool host_little = std::endian::native == std::endian::little;
  const std::streamoff data_start = f.tellg();
  for (int r = height - 1; r >= 0; --r) {
    f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(width * sizeof(float)));
    if (!f) {
      const std::streamoff offset =
          data_start + static_cast<std::streamoff>(height - 1 - r) * width * 4 + f.gcount();
      std::ostringstream msg;
      msg << "truncated pixel data at byte offset " << offset;
      fail(path, msg.str());
    }
    for (int c = 0; c < width; ++c) {
      float v = row[static_cast<std::size_t>(c)];
      if (file_little != host_little) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        bits = __builtin_bswap32(bits);
        std::memcpy(&v, &bits, 4);
      }
      const double abs_scale = std::abs(scale);
      if (abs_scale != 1.0) v = static_cast<float>(v * abs_scale);
      frame.values(r, c) = v;
      frame.mask(r, c) = std::isfinite(v) && v > 0.0f;
    }
  }
  return frame;
}

}  // namespace colotk::io
