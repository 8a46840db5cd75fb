#pragma once

// Differentiable operations recorded on a Tape. Parallel loops always give
// each iteration a disjoint slice of the output; reductions across the batch
// run serially in index order.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdcs/autodiff.hpp"
#include "mdcs/tensor.hpp"

namespace mdcs {

namespace detail {

/// Dot product with four interleaved partial sums in a fixed order.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline double sum(const double* a, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i];
    s1 += a[i + 1];
    s2 += a[i + 2];
    s3 += a[i + 3];
  }
  for (; i < n; ++i) s0 += a[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

inline std::ptrdiff_t sidx(std::size_t v) { return static_cast<std::ptrdiff_t>(v); }

/// Accumulates a zero-padded k x k correlation of one plane into `out`:
/// out[y][x] += sum_{u,v} w[u][v] * in[y+u-p][x+v-p].
inline void depthwise_plane(const double* in, const double* w, double* out, std::size_t h, std::size_t wd,
                            std::size_t k) {
  const std::ptrdiff_t p = sidx(k / 2), H = sidx(h), W = sidx(wd);
  for (std::ptrdiff_t u = 0; u < sidx(k); ++u) {
    for (std::ptrdiff_t v = 0; v < sidx(k); ++v) {
      const double wt = w[u * sidx(k) + v];
      const std::ptrdiff_t dy = u - p, dx = v - p;
      const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy), y1 = std::min(H, H - dy);
      const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx), x1 = std::min(W, W - dx);
      for (std::ptrdiff_t y = y0; y < y1; ++y) {
        double* o = out + y * W;
        const double* s = in + (y + dy) * W + dx;
        for (std::ptrdiff_t x = x0; x < x1; ++x) o[x] += wt * s[x];
      }
    }
  }
}

/// Transposed correlation: gin[y+u-p][x+v-p] += w[u][v] * gout[y][x].
inline void depthwise_plane_transpose(const double* gout, const double* w, double* gin, std::size_t h,
                                      std::size_t wd, std::size_t k) {
  const std::ptrdiff_t p = sidx(k / 2), H = sidx(h), W = sidx(wd);
  for (std::ptrdiff_t u = 0; u < sidx(k); ++u) {
    for (std::ptrdiff_t v = 0; v < sidx(k); ++v) {
      const double wt = w[u * sidx(k) + v];
      const std::ptrdiff_t dy = u - p, dx = v - p;
      const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy), y1 = std::min(H, H - dy);
      const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx), x1 = std::min(W, W - dx);
      for (std::ptrdiff_t y = y0; y < y1; ++y) {
        const double* g = gout + y * W;
        double* d = gin + (y + dy) * W + dx;
        for (std::ptrdiff_t x = x0; x < x1; ++x) d[x] += wt * g[x];
      }
    }
  }
}

/// d(out)/d(w[u][v]) contribution of one plane: sum_{y,x} gout[y][x] * in[y+u-p][x+v-p].
inline void depthwise_plane_weight_grad(const double* in, const double* gout, double* gw, std::size_t h,
                                        std::size_t wd, std::size_t k) {
  const std::ptrdiff_t p = sidx(k / 2), H = sidx(h), W = sidx(wd);
  for (std::ptrdiff_t u = 0; u < sidx(k); ++u) {
    for (std::ptrdiff_t v = 0; v < sidx(k); ++v) {
      const std::ptrdiff_t dy = u - p, dx = v - p;
      const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy), y1 = std::min(H, H - dy);
      const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx), x1 = std::min(W, W - dx);
      double acc = 0.0;
      for (std::ptrdiff_t y = y0; y < y1; ++y) {
        acc += dot(gout + y * W + x0, in + (y + dy) * W + dx + x0, static_cast<std::size_t>(x1 - x0));
      }
      gw[u * sidx(k) + v] += acc;
    }
  }
}

}  // namespace detail

/// Depthwise k x k convolution (zero same-padding, stride 1) followed by a
/// pointwise 1 x 1 channel mix and bias.
///
/// input [B,C,H,W], depthwise [C,k,k], pointwise [C_out,C], bias [C_out]
/// -> [B,C_out,H,W].
inline Var separable_conv2d(Var input, Var depthwise, Var pointwise, Var bias) {
  Tape& tape = *input.tape;
  const Tensor& x = tape.value(input);
  const Tensor& dw = tape.value(depthwise);
  const Tensor& pw = tape.value(pointwise);
  const Tensor& b = tape.value(bias);
  require_rank(x, 4, "separable_conv2d input");
  require_rank(dw, 3, "separable_conv2d depthwise kernels");
  require_rank(pw, 2, "separable_conv2d pointwise kernels");
  require_rank(b, 1, "separable_conv2d bias");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t k = dw.dim(1);
  if (dw.dim(0) != C || dw.dim(2) != k) {
    throw ShapeError("separable_conv2d: depthwise kernels " + shape_string(dw.shape()) +
                     " do not match input channels of " + shape_string(x.shape()));
  }
  if (k % 2 == 0) throw ShapeError("separable_conv2d: kernel size must be odd, got " + std::to_string(k));
  if (pw.dim(1) != C) {
    throw ShapeError("separable_conv2d: pointwise kernels " + shape_string(pw.shape()) + " expect " +
                     std::to_string(pw.dim(1)) + " input channels, input has " + std::to_string(C));
  }
  const std::size_t Co = pw.dim(0);
  if (b.dim(0) != Co) throw ShapeError("separable_conv2d: bias length does not match output channels");
  const std::size_t HW = H * W;

  auto mid = std::make_shared<Tensor>(Shape{B, C, H, W});
  {
    const double* xs = x.raw();
    double* ms = mid->raw();
    const double* ws = dw.raw();
    const std::ptrdiff_t n = detail::sidx(B * C);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bc = 0; bc < n; ++bc) {
      const std::size_t c = static_cast<std::size_t>(bc) % C;
      detail::depthwise_plane(xs + bc * HW, ws + c * k * k, ms + bc * HW, H, W, k);
    }
  }
  Tensor out(Shape{B, Co, H, W});
  {
    const double* ms = mid->raw();
    const double* ps = pw.raw();
    const double* bs = b.raw();
    double* os = out.raw();
    const std::ptrdiff_t n = detail::sidx(B * Co);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bo = 0; bo < n; ++bo) {
      const std::size_t bi = static_cast<std::size_t>(bo) / Co, o = static_cast<std::size_t>(bo) % Co;
      double* dst = os + bo * HW;
      std::fill(dst, dst + HW, bs[o]);
      for (std::size_t c = 0; c < C; ++c) detail::axpy(ps[o * C + c], ms + (bi * C + c) * HW, dst, HW);
    }
  }

  return tape.record(std::move(out), {input, depthwise, pointwise, bias},
                     [=](Tape& t, std::span<const double> g) {
                       const double* gs = g.data();
                       const double* ms = mid->raw();
                       const double* ps = t.value(pointwise).raw();
                       if (auto gb = t.adjoint_sink(bias); !gb.empty()) {
                         for (std::size_t o = 0; o < Co; ++o) {
                           double acc = 0.0;
                           for (std::size_t bi = 0; bi < B; ++bi) acc += detail::sum(gs + (bi * Co + o) * HW, HW);
                           gb[o] += acc;
                         }
                       }
                       if (auto gp = t.adjoint_sink(pointwise); !gp.empty()) {
                         const std::ptrdiff_t n = detail::sidx(Co * C);
#pragma omp parallel for schedule(static)
                         for (std::ptrdiff_t oc = 0; oc < n; ++oc) {
                           const std::size_t o = static_cast<std::size_t>(oc) / C, c = static_cast<std::size_t>(oc) % C;
                           double acc = 0.0;
                           for (std::size_t bi = 0; bi < B; ++bi) {
                             acc += detail::dot(gs + (bi * Co + o) * HW, ms + (bi * C + c) * HW, HW);
                           }
                           gp[static_cast<std::size_t>(oc)] += acc;
                         }
                       }
                       auto gdw = t.adjoint_sink(depthwise);
                       auto gx = t.adjoint_sink(input);
                       if (gdw.empty() && gx.empty()) return;
                       // Adjoint of the depthwise output.
                       std::vector<double> gmid(B * C * HW, 0.0);
                       {
                         const std::ptrdiff_t n = detail::sidx(B * C);
#pragma omp parallel for schedule(static)
                         for (std::ptrdiff_t bc = 0; bc < n; ++bc) {
                           const std::size_t bi = static_cast<std::size_t>(bc) / C, c = static_cast<std::size_t>(bc) % C;
                           double* dst = gmid.data() + bc * HW;
                           for (std::size_t o = 0; o < Co; ++o) detail::axpy(ps[o * C + c], gs + (bi * Co + o) * HW, dst, HW);
                         }
                       }
                       const double* xs = t.value(input).raw();
                       const double* ws = t.value(depthwise).raw();
                       if (!gdw.empty()) {
                         const std::ptrdiff_t n = detail::sidx(C);
#pragma omp parallel for schedule(static)
                         for (std::ptrdiff_t c = 0; c < n; ++c) {
                           std::vector<double> acc(k * k, 0.0);
                           for (std::size_t bi = 0; bi < B; ++bi) {
                             const std::size_t plane = (bi * C + static_cast<std::size_t>(c)) * HW;
                             detail::depthwise_plane_weight_grad(xs + plane, gmid.data() + plane, acc.data(), H, W, k);
                           }
                           for (std::size_t i = 0; i < k * k; ++i) gdw[static_cast<std::size_t>(c) * k * k + i] += acc[i];
                         }
                       }
                       if (!gx.empty()) {
                         const std::ptrdiff_t n = detail::sidx(B * C);
#pragma omp parallel for schedule(static)
                         for (std::ptrdiff_t bc = 0; bc < n; ++bc) {
                           const std::size_t c = static_cast<std::size_t>(bc) % C;
                           detail::depthwise_plane_transpose(gmid.data() + bc * HW, ws + c * k * k, gx.data() + bc * HW,
                                                             H, W, k);
                         }
                       }
                     });
}

/// 2 x 2 max pooling with stride 2. Ties go to the first element in
/// row-major scan order of the window.
inline Var maxpool2d(Var input) {
  Tape& tape = *input.tape;
  const Tensor& x = tape.value(input);
  require_rank(x, 4, "maxpool2d input");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % 2 != 0 || W % 2 != 0) {
    throw ShapeError("maxpool2d: spatial dims must be even, got " + shape_string(x.shape()));
  }
  const std::size_t Ho = H / 2, Wo = W / 2;
  Tensor out(Shape{B, C, Ho, Wo});
  auto argmax = std::make_shared<std::vector<std::uint32_t>>(out.size());
  const double* xs = x.raw();
  double* os = out.raw();
  const std::ptrdiff_t n = detail::sidx(B * C);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bc = 0; bc < n; ++bc) {
    const double* plane = xs + bc * H * W;
    for (std::size_t oy = 0; oy < Ho; ++oy) {
      for (std::size_t ox = 0; ox < Wo; ++ox) {
        const std::size_t cand[4] = {2 * oy * W + 2 * ox, 2 * oy * W + 2 * ox + 1, (2 * oy + 1) * W + 2 * ox,
                                     (2 * oy + 1) * W + 2 * ox + 1};
        std::size_t best = cand[0];
        for (int i = 1; i < 4; ++i) {
          if (plane[cand[i]] > plane[best]) best = cand[i];
        }
        const std::size_t o = static_cast<std::size_t>(bc) * Ho * Wo + oy * Wo + ox;
        os[o] = plane[best];
        (*argmax)[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return tape.record(std::move(out), {input}, [=](Tape& t, std::span<const double> g) {
    auto gx = t.adjoint_sink(input);
    if (gx.empty()) return;
    const std::size_t per_out = Ho * Wo, per_in = H * W;
    for (std::size_t o = 0; o < g.size(); ++o) gx[(o / per_out) * per_in + (*argmax)[o]] += g[o];
  });
}

/// Elementwise max(0, x); the subgradient at 0 is 0.
inline Var relu(Var input) {
  Tape& tape = *input.tape;
  const Tensor& x = tape.value(input);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return tape.record(std::move(out), {input}, [=](Tape& t, std::span<const double> g) {
    auto gx = t.adjoint_sink(input);
    if (gx.empty()) return;
    const Tensor& xv = t.value(input);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += g[i];
    }
  });
}

/// Affine map per row: input [B,F], weights [F_out,F], bias [F_out] -> [B,F_out].
inline Var dense(Var input, Var weights, Var bias) {
  Tape& tape = *input.tape;
  const Tensor& x = tape.value(input);
  const Tensor& w = tape.value(weights);
  const Tensor& b = tape.value(bias);
  require_rank(x, 2, "dense input");
  require_rank(w, 2, "dense weights");
  require_rank(b, 1, "dense bias");
  const std::size_t B = x.dim(0), F = x.dim(1), Fo = w.dim(0);
  if (w.dim(1) != F) {
    throw ShapeError("dense: weights " + shape_string(w.shape()) + " incompatible with input " +
                     shape_string(x.shape()));
  }
  if (b.dim(0) != Fo) throw ShapeError("dense: bias length does not match output features");
  Tensor out(Shape{B, Fo});
  {
    const double* xs = x.raw();
    const double* ws = w.raw();
    const double* bs = b.raw();
    double* os = out.raw();
    const std::ptrdiff_t n = detail::sidx(B * Fo);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bo = 0; bo < n; ++bo) {
      const std::size_t bi = static_cast<std::size_t>(bo) / Fo, o = static_cast<std::size_t>(bo) % Fo;
      os[bo] = bs[o] + detail::dot(xs + bi * F, ws + o * F, F);
    }
  }
  return tape.record(std::move(out), {input, weights, bias}, [=](Tape& t, std::span<const double> g) {
    const double* xs = t.value(input).raw();
    const double* ws = t.value(weights).raw();
    const double* gs = g.data();
    if (auto gb = t.adjoint_sink(bias); !gb.empty()) {
      for (std::size_t o = 0; o < Fo; ++o) {
        double acc = 0.0;
        for (std::size_t bi = 0; bi < B; ++bi) acc += gs[bi * Fo + o];
        gb[o] += acc;
      }
    }
    if (auto gw = t.adjoint_sink(weights); !gw.empty()) {
      const std::ptrdiff_t n = detail::sidx(Fo);
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t o = 0; o < n; ++o) {
        for (std::size_t bi = 0; bi < B; ++bi) {
          detail::axpy(gs[bi * Fo + static_cast<std::size_t>(o)], xs + bi * F, gw.data() + o * F, F);
        }
      }
    }
    if (auto gx = t.adjoint_sink(input); !gx.empty()) {
      const std::ptrdiff_t n = detail::sidx(B);
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t bi = 0; bi < n; ++bi) {
        for (std::size_t o = 0; o < Fo; ++o) detail::axpy(gs[bi * Fo + o], ws + o * F, gx.data() + bi * F, F);
      }
    }
  });
}

/// Row-wise softmax probabilities of a [B,K] logit tensor.
inline Tensor softmax_rows(const Tensor& logits) {
  require_rank(logits, 2, "softmax_rows");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  Tensor p(logits.shape());
  for (std::size_t b = 0; b < B; ++b) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) m = std::max(m, logits[b * K + k]);
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(logits[b * K + k] - m);
    for (std::size_t k = 0; k < K; ++k) p[b * K + k] = std::exp(logits[b * K + k] - m) / z;
  }
  return p;
}

/// Mean over the batch of -log softmax(logits)[label], max-subtracted.
/// logits [B,2]; labels must be 0 or 1.
inline Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  Tape& tape = *logits.tape;
  const Tensor& z = tape.value(logits);
  require_rank(z, 2, "softmax_cross_entropy logits");
  const std::size_t B = z.dim(0), K = z.dim(1);
  if (K != 2) throw ShapeError("softmax_cross_entropy: expected 2 classes, got " + shape_string(z.shape()));
  if (labels.size() != B) throw ShapeError("softmax_cross_entropy: label count does not match batch size");
  for (int l : labels) {
    if (l != 0 && l != 1) throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(l) + " not in {0,1}");
  }
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) m = std::max(m, z[b * K + k]);
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += std::exp(z[b * K + k] - m);
    total += (m + std::log(s)) - z[b * K + static_cast<std::size_t>(labels[b])];
  }
  std::vector<int> lab(labels.begin(), labels.end());
  return tape.record(Tensor::scalar(total / static_cast<double>(B)), {logits},
                     [=](Tape& t, std::span<const double> g) {
                       auto gz = t.adjoint_sink(logits);
                       if (gz.empty()) return;
                       const Tensor p = softmax_rows(t.value(logits));
                       const double scale = g[0] / static_cast<double>(B);
                       for (std::size_t b = 0; b < B; ++b) {
                         for (std::size_t k = 0; k < K; ++k) {
                           const double target = static_cast<std::size_t>(lab[b]) == k ? 1.0 : 0.0;
                           gz[b * K + k] += scale * (p[b * K + k] - target);
                         }
                       }
                     });
}

/// [B, ...] -> [B, prod(...)].
inline Var flatten(Var input) {
  Tape& tape = *input.tape;
  const Tensor& x = tape.value(input);
  const std::size_t B = x.dim(0);
  Tensor out = x.reshaped(Shape{B, x.size() / B});
  return tape.record(std::move(out), {input}, [=](Tape& t, std::span<const double> g) {
    auto gx = t.adjoint_sink(input);
    if (gx.empty()) return;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

/// Feature concatenation: [B,F1], [B,F2] -> [B,F1+F2].
inline Var concat_features(Var a, Var b) {
  Tape& tape = *a.tape;
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_rank(av, 2, "concat_features lhs");
  require_rank(bv, 2, "concat_features rhs");
  if (av.dim(0) != bv.dim(0)) throw ShapeError("concat_features: batch sizes differ");
  const std::size_t B = av.dim(0), F1 = av.dim(1), F2 = bv.dim(1);
  Tensor out(Shape{B, F1 + F2});
  for (std::size_t r = 0; r < B; ++r) {
    std::copy_n(av.raw() + r * F1, F1, out.raw() + r * (F1 + F2));
    std::copy_n(bv.raw() + r * F2, F2, out.raw() + r * (F1 + F2) + F1);
  }
  return tape.record(std::move(out), {a, b}, [=](Tape& t, std::span<const double> g) {
    if (auto ga = t.adjoint_sink(a); !ga.empty()) {
      for (std::size_t r = 0; r < B; ++r)
        for (std::size_t i = 0; i < F1; ++i) ga[r * F1 + i] += g[r * (F1 + F2) + i];
    }
    if (auto gb = t.adjoint_sink(b); !gb.empty()) {
      for (std::size_t r = 0; r < B; ++r)
        for (std::size_t i = 0; i < F2; ++i) gb[r * F2 + i] += g[r * (F1 + F2) + F1 + i];
    }
  });
}

/// Elementwise a + b for equal shapes.
inline Var add(Var a, Var b) {
  Tape& tape = *a.tape;
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_same_shape(av, bv, "add");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  return tape.record(std::move(out), {a, b}, [=](Tape& t, std::span<const double> g) {
    if (auto ga = t.adjoint_sink(a); !ga.empty())
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    if (auto gb = t.adjoint_sink(b); !gb.empty())
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
  });
}

/// x scaled by element `index` of a coefficient vector.
inline Var scale_by(Var x, Var coeffs, std::size_t index) {
  Tape& tape = *x.tape;
  const Tensor& xv = tape.value(x);
  const Tensor& cv = tape.value(coeffs);
  if (index >= cv.size()) throw ShapeError("scale_by: coefficient index out of range");
  const double a = cv[index];
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = a * xv[i];
  return tape.record(std::move(out), {x, coeffs}, [=](Tape& t, std::span<const double> g) {
    const Tensor& xs = t.value(x);
    if (auto gc = t.adjoint_sink(coeffs); !gc.empty()) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xs[i];
      gc[index] += acc;
    }
    if (auto gx = t.adjoint_sink(x); !gx.empty()) {
      const double av = t.value(coeffs)[index];
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += av * g[i];
    }
  });
}

/// Sum of all elements as a scalar node.
inline Var sum_all(Var x) {
  Tape& tape = *x.tape;
  const Tensor& xv = tape.value(x);
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i];
  return tape.record(Tensor::scalar(s), {x}, [=](Tape& t, std::span<const double> g) {
    if (auto gx = t.adjoint_sink(x); !gx.empty())
      for (double& v : gx) v += g[0];
  });
}

/// Sum of elementwise products with a constant weight tensor; a scalar probe
/// that gives every output element a distinct upstream gradient.
inline Var weighted_sum(Var x, const Tensor& weights) {
  Tape& tape = *x.tape;
  const Tensor& xv = tape.value(x);
  require_same_shape(xv, weights, "weighted_sum");
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i] * weights[i];
  return tape.record(Tensor::scalar(s), {x}, [=](Tape& t, std::span<const double> g) {
    if (auto gx = t.adjoint_sink(x); !gx.empty())
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0] * weights[i];
  });
}

}  // namespace mdcs
