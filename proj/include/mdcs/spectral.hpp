#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mdcs/tensor.hpp"

namespace mdcs {

enum class Transform { DCT, FFT_AMPLITUDE, DWT_HAAR };

inline const char* transform_name(Transform t) {
  switch (t) {
    case Transform::DCT: return "dct";
    case Transform::FFT_AMPLITUDE: return "fft";
    case Transform::DWT_HAAR: return "dwt";
  }
  return "?";
}

inline Transform parse_transform(const std::string& s) {
  if (s == "dct") return Transform::DCT;
  if (s == "fft") return Transform::FFT_AMPLITUDE;
  if (s == "dwt") return Transform::DWT_HAAR;
  throw std::invalid_argument("unknown transform '" + s + "' (expected dct, fft or dwt)");
}

namespace detail {

inline std::size_t require_square(const Tensor& t, const char* what) {
  if (t.rank() != 2 || t.dim(0) != t.dim(1)) {
    throw ShapeError(std::string(what) + ": expected a square [N,N] map, got " + shape_string(t.shape()));
  }
  return t.dim(0);
}

/// Row i holds C(i) * cos((2a+1) i pi / 2N) for a = 0..N-1, C(0) = 1/sqrt(2).
inline std::vector<double> dct_basis(std::size_t n) {
  std::vector<double> m(n * n);
  const double pi = std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = i == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
    for (std::size_t a = 0; a < n; ++a) {
      m[i * n + a] = c * std::cos(static_cast<double>((2 * a + 1) * i) * pi / static_cast<double>(2 * n));
    }
  }
  return m;
}

/// In-place radix-2 FFT for power-of-two lengths, naive DFT otherwise.
inline void dft_inplace(std::vector<std::complex<double>>& x, bool inverse) {
  const std::size_t n = x.size();
  const double sign = inverse ? 1.0 : -1.0;
  const double pi = std::numbers::pi;
  if (n <= 1) return;
  if ((n & (n - 1)) != 0) {
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const double ang = sign * 2.0 * pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
        acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      out[k] = acc;
    }
    x = std::move(out);
    return;
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * pi / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w(std::cos(ang * static_cast<double>(k)), std::sin(ang * static_cast<double>(k)));
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
      }
    }
  }
}

}  // namespace detail

/// 2-D DCT of a square map with the scaling
///
///   DCT(i,j) = 1/sqrt(2N) C(i) C(j) sum_a sum_b p(a,b)
///              cos((2a+1) i pi / 2N) cos((2b+1) j pi / 2N),
///   C(0) = 1/sqrt(2), C(x>0) = 1,
///
/// evaluated as 1-D transforms along rows, then along columns. This is not the
/// orthonormal convention; for N = 2 the two coincide.
inline Tensor dct2d(const Tensor& channel) {
  const std::size_t n = detail::require_square(channel, "dct2d");
  thread_local std::size_t cached_n = 0;
  thread_local std::vector<double> m;
  if (cached_n != n) {
    m = detail::dct_basis(n);
    cached_n = n;
  }
  // Along b (within each row a): tmp[a][j] = sum_b p[a][b] M[j][b].
  std::vector<double> tmp(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t b = 0; b < n; ++b) acc += channel[a * n + b] * m[j * n + b];
      tmp[a * n + j] = acc;
    }
  // Along a: out[i][j] = s * sum_a M[i][a] tmp[a][j].
  const double s = 1.0 / std::sqrt(2.0 * static_cast<double>(n));
  Tensor out(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < n; ++a) acc += m[i * n + a] * tmp[a * n + j];
      out[i * n + j] = s * acc;
    }
  return out;
}

/// Unnormalized 2-D DFT of a real square map. Row-major [N,N] complex output.
inline std::vector<std::complex<double>> dft2d(const Tensor& channel, bool inverse = false) {
  const std::size_t n = detail::require_square(channel, "dft2d");
  std::vector<std::complex<double>> grid(n * n);
  for (std::size_t i = 0; i < n * n; ++i) grid[i] = channel[i];
  std::vector<std::complex<double>> line(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(grid.begin() + static_cast<std::ptrdiff_t>(r * n), n, line.begin());
    detail::dft_inplace(line, inverse);
    std::copy(line.begin(), line.end(), grid.begin() + static_cast<std::ptrdiff_t>(r * n));
  }
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) line[r] = grid[r * n + c];
    detail::dft_inplace(line, inverse);
    for (std::size_t r = 0; r < n; ++r) grid[r * n + c] = line[r];
  }
  return grid;
}

/// |DFT| of a square map, DC at (0,0) (no center shift).
inline Tensor fft_amplitude2d(const Tensor& channel) {
  const std::size_t n = detail::require_square(channel, "fft_amplitude2d");
  const auto grid = dft2d(channel);
  Tensor out(Shape{n, n});
  for (std::size_t i = 0; i < n * n; ++i) out[i] = std::abs(grid[i]);
  return out;
}

/// Moves the DC term to the center for display (quadrant swap).
inline Tensor center_shift(const Tensor& map) {
  const std::size_t n = detail::require_square(map, "center_shift");
  Tensor out(Shape{n, n});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) out[((r + n / 2) % n) * n + (c + n / 2) % n] = map[r * n + c];
  return out;
}

/// Single-level orthonormal 2-D Haar transform, tiled [LL LH; HL HH].
///
/// For each 2 x 2 block [a b; c d]:
///   LL = (a+b+c+d)/2, LH = (a-b+c-d)/2, HL = (a+b-c-d)/2, HH = (a-b-c+d)/2.
inline Tensor dwt_haar2d(const Tensor& channel) {
  const std::size_t n = detail::require_square(channel, "dwt_haar2d");
  if (n % 2 != 0) throw ShapeError("dwt_haar2d: N must be even, got " + std::to_string(n));
  const std::size_t h = n / 2;
  Tensor out(Shape{n, n});
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < h; ++c) {
      const double a = channel[(2 * r) * n + 2 * c], b = channel[(2 * r) * n + 2 * c + 1];
      const double cc = channel[(2 * r + 1) * n + 2 * c], d = channel[(2 * r + 1) * n + 2 * c + 1];
      out[r * n + c] = 0.5 * (a + b + cc + d);
      out[r * n + c + h] = 0.5 * (a - b + cc - d);
      out[(r + h) * n + c] = 0.5 * (a + b - cc - d);
      out[(r + h) * n + c + h] = 0.5 * (a - b - cc + d);
    }
  return out;
}

inline Tensor inverse_dwt_haar2d(const Tensor& coeffs) {
  const std::size_t n = detail::require_square(coeffs, "inverse_dwt_haar2d");
  if (n % 2 != 0) throw ShapeError("inverse_dwt_haar2d: N must be even, got " + std::to_string(n));
  const std::size_t h = n / 2;
  Tensor out(Shape{n, n});
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < h; ++c) {
      const double ll = coeffs[r * n + c], lh = coeffs[r * n + c + h];
      const double hl = coeffs[(r + h) * n + c], hh = coeffs[(r + h) * n + c + h];
      out[(2 * r) * n + 2 * c] = 0.5 * (ll + lh + hl + hh);
      out[(2 * r) * n + 2 * c + 1] = 0.5 * (ll - lh + hl - hh);
      out[(2 * r + 1) * n + 2 * c] = 0.5 * (ll + lh - hl - hh);
      out[(2 * r + 1) * n + 2 * c + 1] = 0.5 * (ll - lh - hl + hh);
    }
  return out;
}

inline Tensor apply_transform(const Tensor& channel, Transform t) {
  switch (t) {
    case Transform::DCT: return dct2d(channel);
    case Transform::FFT_AMPLITUDE: return fft_amplitude2d(channel);
    case Transform::DWT_HAAR: return dwt_haar2d(channel);
  }
  throw std::invalid_argument("apply_transform: unknown transform");
}

inline double log_scale(double c) { return std::log1p(std::abs(c)); }

/// Elementwise ln(1 + |c|): zero-safe, sign-collapsing, monotone in |c|.
inline Tensor log_scale(const Tensor& coeffs) {
  Tensor out(coeffs.shape());
  for (std::size_t i = 0; i < coeffs.size(); ++i) out[i] = log_scale(coeffs[i]);
  return out;
}

/// Log-scaled frequency map of a [C,N,N] image.
struct SpectralFeature {
  Tensor map;  // [C,N,N]
  Transform transform = Transform::DCT;
  bool log_scaled = true;
  std::size_t source_size = 0;
};

inline SpectralFeature spectral_feature(const Tensor& image, Transform t) {
  require_rank(image, 3, "spectral_feature");
  const std::size_t C = image.dim(0), N = image.dim(1);
  if (image.dim(2) != N) throw ShapeError("spectral_feature: image planes must be square");
  SpectralFeature f{Tensor(image.shape()), t, true, N};
  for (std::size_t c = 0; c < C; ++c) {
    Tensor plane(Shape{N, N}, std::vector<double>(image.raw() + c * N * N, image.raw() + (c + 1) * N * N));
    const Tensor spec = log_scale(apply_transform(plane, t));
    std::copy_n(spec.raw(), N * N, f.map.raw() + c * N * N);
  }
  return f;
}

enum class Branch { SPATIAL, FREQUENCY };

/// Per-channel standardization statistics for one branch.
struct BranchStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  Branch branch = Branch::SPATIAL;
};

inline constexpr double kStdFloor = 1e-8;

/// Per-channel mean and population std over every position of every map.
inline BranchStats fit_branch_stats(std::span<const Tensor> view, Branch branch) {
  if (view.empty()) throw std::invalid_argument("fit_branch_stats: empty corpus view");
  const std::size_t C = view.front().dim(0);
  for (const Tensor& t : view) {
    require_rank(t, 3, "fit_branch_stats");
    if (t.shape() != view.front().shape()) throw ShapeError("fit_branch_stats: maps differ in shape");
  }
  const std::size_t plane = view.front().size() / C;
  const double count = static_cast<double>(plane * view.size());
  BranchStats s{std::vector<double>(C, 0.0), std::vector<double>(C, 0.0), branch};
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0.0;
    for (const Tensor& t : view)
      for (std::size_t i = 0; i < plane; ++i) acc += t[c * plane + i];
    const double mean = acc / count;
    double var = 0.0;
    for (const Tensor& t : view)
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = t[c * plane + i] - mean;
        var += d * d;
      }
    s.mean[c] = mean;
    s.stddev[c] = std::max(std::sqrt(var / count), kStdFloor);
  }
  return s;
}

/// (x - mean) / std per channel. Applying twice standardizes again, so it is
/// not idempotent.
inline Tensor apply_normalization(const Tensor& x, const BranchStats& stats) {
  require_rank(x, 3, "apply_normalization");
  const std::size_t C = x.dim(0);
  if (stats.mean.size() != C || stats.stddev.size() != C) {
    throw ShapeError("apply_normalization: stats have " + std::to_string(stats.mean.size()) + " channels, map has " +
                     std::to_string(C));
  }
  const std::size_t plane = x.size() / C;
  Tensor out(x.shape());
  for (std::size_t c = 0; c < C; ++c) {
    const double sd = std::max(stats.stddev[c], kStdFloor);
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = (x[c * plane + i] - stats.mean[c]) / sd;
  }
  return out;
}

/// Elementwise mean of log_scale(transform(frame)) over the frames.
inline Tensor average_spectrum(std::span<const Tensor> frames, Transform t) {
  if (frames.empty()) throw std::invalid_argument("average_spectrum: no frames");
  const Shape shape = frames.front().shape();
  Tensor acc(shape);
  for (const Tensor& f : frames) {
    if (f.shape() != shape) throw ShapeError("average_spectrum: frames differ in shape");
    const Tensor spec = log_scale(apply_transform(f, t));
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += spec[i];
  }
  const double inv = static_cast<double>(frames.size());
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] /= inv;
  return acc;
}

inline constexpr std::size_t kRadialBands = 4;

/// Band index of coefficient (i,j) in an N x N map: the normalized radius
/// sqrt(i^2 + j^2) / (sqrt(2) N), which lies in [0,1), split into quarters.
inline std::size_t radial_band(std::size_t i, std::size_t j, std::size_t n) {
  const double r = std::sqrt(static_cast<double>(i * i + j * j)) / (std::sqrt(2.0) * static_cast<double>(n));
  return std::min<std::size_t>(kRadialBands - 1, static_cast<std::size_t>(r * kRadialBands));
}

/// Mean value of a square map inside each radial band, low to high frequency.
inline std::vector<double> radial_band_means(const Tensor& map) {
  const std::size_t n = detail::require_square(map, "radial_band_means");
  std::vector<double> sum(kRadialBands, 0.0), cnt(kRadialBands, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t b = radial_band(i, j, n);
      sum[b] += map[i * n + j];
      cnt[b] += 1.0;
    }
  for (std::size_t b = 0; b < kRadialBands; ++b) sum[b] = cnt[b] > 0 ? sum[b] / cnt[b] : 0.0;
  return sum;
}

/// Splits a [C,N,N] image into its C planes.
inline std::vector<Tensor> channel_planes(const Tensor& image) {
  require_rank(image, 3, "channel_planes");
  const std::size_t C = image.dim(0), plane = image.dim(1) * image.dim(2);
  std::vector<Tensor> out;
  out.reserve(C);
  for (std::size_t c = 0; c < C; ++c) {
    out.emplace_back(Shape{image.dim(1), image.dim(2)},
                     std::vector<double>(image.raw() + c * plane, image.raw() + (c + 1) * plane));
  }
  return out;
}

}  // namespace mdcs
