#pragma once

// Synthetic forgery corpus. "Real" images are 1/f^2 Gaussian random fields
// with a smooth colour gradient; "fake" counterparts pass a centred disc
// through a 2x area-downsample / nearest-neighbour-upsample round trip,
// which leaves replicated high-frequency structure in the spectrum.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdcs/seed.hpp"
#include "mdcs/spectral.hpp"
#include "mdcs/stats.hpp"
#include "mdcs/tensor.hpp"

namespace mdcs {

enum class Label : int { REAL = 0, FAKE = 1 };

inline const char* label_name(Label l) { return l == Label::REAL ? "real" : "fake"; }

struct Sample {
  Tensor image;  // [3,N,N], values in [0,1]
  Label label = Label::REAL;
  std::int64_t group_id = 0;
  std::uint64_t seed = 0;
};

struct Corpus {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
  std::size_t image_size = 0;

  std::size_t count(const std::vector<Sample>& split, Label l) const {
    return static_cast<std::size_t>(
        std::count_if(split.begin(), split.end(), [&](const Sample& s) { return s.label == l; }));
  }
};

struct SplitFractions {
  double train = 0.72;
  double val = 0.14;
  double test = 0.14;
};

inline constexpr std::size_t kMinImageSize = 16;

namespace detail {

/// Orthonormal DCT-II matrix: row i is sqrt(2/N) C(i) cos((2a+1) i pi / 2N).
inline std::vector<double> orthonormal_dct_matrix(std::size_t n) {
  std::vector<double> m(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = (i == 0 ? 1.0 / std::sqrt(2.0) : 1.0) * std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t a = 0; a < n; ++a)
      m[i * n + a] =
          c * std::cos(static_cast<double>((2 * a + 1) * i) * std::numbers::pi / static_cast<double>(2 * n));
  }
  return m;
}

/// Gaussian field whose DCT coefficient at (i,j) has standard deviation
/// 1/sqrt(i^2 + j^2) (power ~ 1/f^2), zero mean; returned as an N*N plane.
inline std::vector<double> pink_field(std::size_t n, const std::vector<double>& basis, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> coeff(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == 0 && j == 0) continue;
      coeff[i * n + j] = gauss(rng) / std::sqrt(static_cast<double>(i * i + j * j));
    }
  // field = M^T coeff M
  std::vector<double> tmp(n * n, 0.0), out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double c = coeff[i * n + j];
      if (c == 0.0) continue;
      for (std::size_t b = 0; b < n; ++b) tmp[i * n + b] += c * basis[j * n + b];
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < n; ++a) {
      const double w = basis[i * n + a];
      for (std::size_t b = 0; b < n; ++b) out[a * n + b] += w * tmp[i * n + b];
    }
  return out;
}

}  // namespace detail

/// Natural-image surrogate: a shared 1/f^2 luminance field plus weaker
/// per-channel fields, a random linear colour gradient, then min-max scaled
/// to [0,1] over all channels.
inline Sample gen_real(std::uint64_t seed, std::size_t n) {
  if (n < kMinImageSize) throw std::invalid_argument("gen_real: image size must be at least 16");
  std::mt19937_64 rng(seed);
  const std::vector<double> basis = detail::orthonormal_dct_matrix(n);
  const std::vector<double> luma = detail::pink_field(n, basis, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor img(Shape{3, n, n});
  for (std::size_t c = 0; c < 3; ++c) {
    const std::vector<double> own = detail::pink_field(n, basis, rng);
    const double gx = 0.05 * gauss(rng), gy = 0.05 * gauss(rng), tint = 0.05 * gauss(rng);
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) {
        const double u = static_cast<double>(x) / static_cast<double>(n) - 0.5;
        const double v = static_cast<double>(y) / static_cast<double>(n) - 0.5;
        img[(c * n + y) * n + x] = luma[y * n + x] + 0.35 * own[y * n + x] + gx * u + gy * v + tint;
      }
  }
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  const double min = *lo, range = *hi - *lo;
  for (double& v : img.data()) v = range > 0.0 ? std::clamp((v - min) / range, 0.0, 1.0) : 0.5;
  return Sample{std::move(img), Label::REAL, 0, seed};
}

inline constexpr double kForgeryRadiusFraction = 0.375;

/// Upsampling-artifact forgery: inside a centred disc of radius 3N/8 the
/// image is blended 50/50 with its 2x area-downsampled, nearest-neighbour
/// upsampled version.
inline Sample gen_fake(const Sample& real) {
  const Tensor& src = real.image;
  require_rank(src, 3, "gen_fake");
  const std::size_t C = src.dim(0), H = src.dim(1), W = src.dim(2);
  if (H % 2 != 0 || W % 2 != 0) throw ShapeError("gen_fake: image dims must be even");
  Tensor out = src;
  const double cy = static_cast<double>(H) / 2.0 - 0.5, cx = static_cast<double>(W) / 2.0 - 0.5;
  const double radius = kForgeryRadiusFraction * static_cast<double>(std::min(H, W));
  for (std::size_t c = 0; c < C; ++c) {
    const double* p = src.raw() + c * H * W;
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
        if (dy * dy + dx * dx > radius * radius) continue;
        const std::size_t by = y & ~std::size_t{1}, bx = x & ~std::size_t{1};
        const double block =
            0.25 * (p[by * W + bx] + p[by * W + bx + 1] + p[(by + 1) * W + bx] + p[(by + 1) * W + bx + 1]);
        out[(c * H + y) * W + x] = std::clamp(0.5 * p[y * W + x] + 0.5 * block, 0.0, 1.0);
      }
  }
  return Sample{std::move(out), Label::FAKE, real.group_id, real.seed};
}

/// Per-image mean log-DCT energy in each radial band, averaged over channels.
inline std::vector<double> image_band_energies(const Tensor& image, Transform t = Transform::DCT) {
  const SpectralFeature f = spectral_feature(image, t);
  std::vector<double> bands(kRadialBands, 0.0);
  const auto planes = channel_planes(f.map);
  for (const Tensor& p : planes) {
    const auto b = radial_band_means(p);
    for (std::size_t k = 0; k < kRadialBands; ++k) bands[k] += b[k] / static_cast<double>(planes.size());
  }
  return bands;
}

/// Welch test on the highest radial band between real and fake images.
inline TwoSampleTest spectral_gap_test(const std::vector<const Sample*>& samples) {
  std::vector<double> real, fake;
  for (const Sample* s : samples) {
    const double e = image_band_energies(s->image).back();
    (s->label == Label::REAL ? real : fake).push_back(e);
  }
  return welch_t_test(real, fake);
}

inline constexpr std::size_t kGapCheckMinPerClass = 20;
inline constexpr double kGapCheckAlpha = 0.01;

/// Deterministic corpus of `n_per_class` real/fake pairs. Pair g gets seed
/// mix(seed, g) and group id g; groups 0..n_train-1 form the training split,
/// then validation, then test. Within a split samples are ordered real, fake
/// per group. With at least 20 pairs the high-frequency spectral gap between
/// classes is checked and a missing gap is an error.
inline Corpus build_corpus(std::size_t n_per_class, std::size_t n, SplitFractions fractions, std::uint64_t seed) {
  const double total = fractions.train + fractions.val + fractions.test;
  if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0 || std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("build_corpus: split fractions must be non-negative and sum to 1");
  }
  if (n < kMinImageSize || n % 2 != 0) throw std::invalid_argument("build_corpus: image size must be even and >= 16");
  const std::size_t groups = n_per_class;
  const auto n_train = static_cast<std::size_t>(std::llround(fractions.train * static_cast<double>(groups)));
  const auto n_val =
      std::min(groups - n_train, static_cast<std::size_t>(std::llround(fractions.val * static_cast<double>(groups))));

  std::vector<Sample> reals(groups), fakes(groups);
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(groups);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t g = 0; g < count; ++g) {
    std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(g));
    for (;;) {
      Sample real = gen_real(s, n);
      real.group_id = g;
      Sample fake = gen_fake(real);
      double diff = 0.0;
      for (std::size_t i = 0; i < real.image.size(); ++i) diff = std::max(diff, std::abs(real.image[i] - fake.image[i]));
      if (diff > 0.0) {
        reals[static_cast<std::size_t>(g)] = std::move(real);
        fakes[static_cast<std::size_t>(g)] = std::move(fake);
        break;
      }
      s = mix_seed(s, 1);  // degenerate (flat) image carries no artifact
    }
  }

  Corpus corpus;
  corpus.image_size = n;
  for (std::size_t g = 0; g < groups; ++g) {
    auto& split = g < n_train ? corpus.train : (g < n_train + n_val ? corpus.val : corpus.test);
    split.push_back(std::move(reals[g]));
    split.push_back(std::move(fakes[g]));
  }

  if (n_per_class >= kGapCheckMinPerClass) {
    std::vector<const Sample*> all;
    for (const auto* split : {&corpus.train, &corpus.val, &corpus.test})
      for (const Sample& s : *split) all.push_back(&s);
    const TwoSampleTest gap = spectral_gap_test(all);
    if (!(gap.p_value < kGapCheckAlpha)) {
      throw std::runtime_error("build_corpus: no significant high-frequency gap between real and fake (p = " +
                               std::to_string(gap.p_value) + ")");
    }
  }
  return corpus;
}

}  // namespace mdcs
