#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "mdcs/image_io.hpp"
#include "mdcs/spectral.hpp"
#include "mdcs/tensor.hpp"

namespace mdcs {

using Rgb = std::array<std::uint8_t, 3>;

/// Colormap anchors at t = 0, 0.5, 1.
inline constexpr std::array<Rgb, 3> kHeatmapStops = {Rgb{0, 0, 0}, Rgb{255, 165, 0}, Rgb{255, 255, 255}};

/// Colour for t in [0,1] (clamped), linear between neighbouring anchors and
/// rounded to the nearest byte.
inline Rgb heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const std::size_t seg = t < 0.5 ? 0 : 1;
  const double u = t < 0.5 ? t * 2.0 : (t - 0.5) * 2.0;
  Rgb out{};
  for (std::size_t k = 0; k < 3; ++k) {
    const double a = kHeatmapStops[seg][k], b = kHeatmapStops[seg + 1][k];
    out[k] = static_cast<std::uint8_t>(std::lround(a + (b - a) * u));
  }
  return out;
}

/// Interleaved RGB bytes for a 2-D map scaled over its own [min, max]. A
/// constant map renders all black.
inline std::vector<std::uint8_t> render_heatmap(const Tensor& map) {
  require_rank(map, 2, "render_heatmap");
  const auto [lo, hi] = std::minmax_element(map.data().begin(), map.data().end());
  const double min = *lo, range = *hi - *lo;
  std::vector<std::uint8_t> rgb;
  rgb.reserve(map.size() * 3);
  for (double v : map.data()) {
    const Rgb c = range > 0.0 ? heat_color((v - min) / range) : kHeatmapStops[0];
    rgb.insert(rgb.end(), c.begin(), c.end());
  }
  return rgb;
}

/// Writes the heatmap of a 2-D map as PPM. `center` moves the zero frequency
/// to the middle and is only meaningful for FFT amplitude maps.
inline void write_heatmap(const std::filesystem::path& path, const Tensor& map, bool center = false) {
  const Tensor shown = center ? center_shift(map) : map;
  write_ppm_bytes(path, render_heatmap(shown), shown.dim(0), shown.dim(1));
}

}  // namespace mdcs
