#pragma once

// Binary PPM (P6, maxval 255) reading and writing.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdcs/tensor.hpp"

namespace mdcs {

/// File-level failure; the message always names the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::uint8_t to_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

/// Interleaved RGB bytes for a [3,H,W] image with values in [0,1].
inline std::vector<std::uint8_t> image_to_bytes(const Tensor& image) {
  require_rank(image, 3, "image_to_bytes");
  if (image.dim(0) != 3) throw ShapeError("image_to_bytes: expected 3 channels, got " + shape_string(image.shape()));
  const std::size_t plane = image.dim(1) * image.dim(2);
  std::vector<std::uint8_t> out(plane * 3);
  for (std::size_t p = 0; p < plane; ++p)
    for (std::size_t c = 0; c < 3; ++c) out[p * 3 + c] = to_byte(image[c * plane + p]);
  return out;
}

inline Tensor bytes_to_image(std::span<const std::uint8_t> rgb, std::size_t height, std::size_t width) {
  if (rgb.size() != height * width * 3) throw ShapeError("bytes_to_image: byte count does not match dimensions");
  Tensor out(Shape{3, height, width});
  const std::size_t plane = height * width;
  for (std::size_t p = 0; p < plane; ++p)
    for (std::size_t c = 0; c < 3; ++c) out[c * plane + p] = static_cast<double>(rgb[p * 3 + c]) / 255.0;
  return out;
}

/// Rounds every value to the nearest 8-bit level, as a save/load round trip would.
inline Tensor quantize_8bit(const Tensor& image) {
  Tensor out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = static_cast<double>(to_byte(image[i])) / 255.0;
  return out;
}

inline void write_ppm_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> rgb, std::size_t height,
                            std::size_t width) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "P6\n" << width << ' ' << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

inline void write_ppm(const std::filesystem::path& path, const Tensor& image) {
  write_ppm_bytes(path, image_to_bytes(image), image.dim(1), image.dim(2));
}

struct PpmBytes {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;
};

inline PpmBytes read_ppm_bytes(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  auto fail = [&](const std::string& why) { return IoError("malformed PPM " + path.string() + ": " + why); };
  // Header tokens may be separated by whitespace and '#' comments.
  auto next_token = [&]() -> std::string {
    std::string tok;
    int ch;
    while ((ch = is.get()) != EOF) {
      if (ch == '#') {
        while ((ch = is.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(static_cast<char>(ch));
    }
    return tok;
  };
  if (next_token() != "P6") throw fail("missing P6 magic");
  auto parse_int = [&](const char* what) {
    const std::string tok = next_token();
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        tok.size() > 9) {
      throw fail(std::string("bad ") + what);
    }
    return static_cast<std::size_t>(std::stoul(tok));
  };
  PpmBytes img;
  img.width = parse_int("width");
  img.height = parse_int("height");
  const std::size_t maxval = parse_int("maxval");
  if (img.width == 0 || img.height == 0) throw fail("zero dimension");
  if (maxval != 255) throw fail("maxval must be 255");
  img.rgb.resize(img.width * img.height * 3);
  is.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (static_cast<std::size_t>(is.gcount()) != img.rgb.size()) throw fail("truncated pixel data");
  if (is.peek() != EOF) throw fail("trailing bytes after pixel data");
  return img;
}

/// [3,H,W] image with values k/255.
inline Tensor read_ppm(const std::filesystem::path& path) {
  const PpmBytes img = read_ppm_bytes(path);
  return bytes_to_image(img.rgb, img.height, img.width);
}

}  // namespace mdcs
