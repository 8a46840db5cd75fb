#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <utility>

#include "mdcs/autodiff.hpp"
#include "mdcs/tensor.hpp"

namespace mdcs {

/// Learnable 2 x 2 mixing of two same-shaped activation maps.
///
///   [x'_R]   [a_RR  a_RD] [x_R]
///   [x'_D] = [a_DR  a_DD] [x_D]
///
/// applied identically at every batch, channel and spatial location. The four
/// scalars live in one [4] tensor ordered (RR, RD, DR, DD) so the optimizer and
/// tape treat them like any other parameter; its grad buffer holds the four
/// accumulators.
struct CrossStitchUnit {
  static constexpr std::size_t kRR = 0, kRD = 1, kDR = 2, kDD = 3;

  Tensor alpha = Tensor(Shape{4}, std::vector<double>{1.0, 0.0, 0.0, 1.0}).set_requires_grad();

  CrossStitchUnit() = default;
  CrossStitchUnit(double rr, double rd, double dr, double dd)
      : alpha(Tensor(Shape{4}, std::vector<double>{rr, rd, dr, dd}).set_requires_grad()) {}

  double rr() const { return alpha[kRR]; }
  double rd() const { return alpha[kRD]; }
  double dr() const { return alpha[kDR]; }
  double dd() const { return alpha[kDD]; }

  std::array<double, 4> values() const { return {alpha[0], alpha[1], alpha[2], alpha[3]}; }
  std::array<double, 4> grads() const {
    if (!alpha.has_grad()) return {0.0, 0.0, 0.0, 0.0};
    auto g = alpha.grad();
    return {g[0], g[1], g[2], g[3]};
  }
};

/// Same-branch weights 0.9, cross-branch weights 0.1: each output starts as a
/// convex combination of the inputs.
inline CrossStitchUnit init_unit() { return CrossStitchUnit(0.9, 0.1, 0.1, 0.9); }

inline std::pair<Tensor, Tensor> stitch_forward(const Tensor& x_r, const Tensor& x_d, const CrossStitchUnit& unit) {
  require_same_shape(x_r, x_d, "stitch_forward");
  const double rr = unit.rr(), rd = unit.rd(), dr = unit.dr(), dd = unit.dd();
  Tensor out_r(x_r.shape()), out_d(x_d.shape());
  for (std::size_t i = 0; i < x_r.size(); ++i) {
    out_r[i] = rr * x_r[i] + rd * x_d[i];
    out_d[i] = dr * x_r[i] + dd * x_d[i];
  }
  return {std::move(out_r), std::move(out_d)};
}

struct StitchGrads {
  Tensor d_x_r;
  Tensor d_x_d;
  std::array<double, 4> d_alpha{};  // (RR, RD, DR, DD)
};

/// Pullback of stitch_forward. Input gradients use the transposed alpha
/// matrix; each alpha gradient sums the per-location products
/// dL/dx'_out * x_in over all locations in row-major order.
inline StitchGrads stitch_backward(const Tensor& g_r, const Tensor& g_d, const Tensor& x_r, const Tensor& x_d,
                                   const CrossStitchUnit& unit) {
  require_same_shape(x_r, x_d, "stitch_backward inputs");
  require_same_shape(g_r, x_r, "stitch_backward upstream R");
  require_same_shape(g_d, x_d, "stitch_backward upstream D");
  const double rr = unit.rr(), rd = unit.rd(), dr = unit.dr(), dd = unit.dd();
  StitchGrads out{Tensor(x_r.shape()), Tensor(x_d.shape()), {}};
  double s_rr = 0.0, s_rd = 0.0, s_dr = 0.0, s_dd = 0.0;
  for (std::size_t i = 0; i < x_r.size(); ++i) {
    out.d_x_r[i] = rr * g_r[i] + dr * g_d[i];
    out.d_x_d[i] = rd * g_r[i] + dd * g_d[i];
    s_rr += g_r[i] * x_r[i];
    s_rd += g_r[i] * x_d[i];
    s_dr += g_d[i] * x_r[i];
    s_dd += g_d[i] * x_d[i];
  }
  out.d_alpha = {s_rr, s_rd, s_dr, s_dd};
  return out;
}

using StitchBackwardFn =
    std::function<StitchGrads(const Tensor&, const Tensor&, const Tensor&, const Tensor&, const CrossStitchUnit&)>;

/// Records a stitch on the tape. `alpha` must be the unit's alpha leaf. The
/// pullback delegates to `backward_rule` (stitch_backward unless a test
/// substitutes a mutant).
inline std::pair<Var, Var> stitch(Var x_r, Var x_d, Var alpha, const StitchBackwardFn& backward_rule = stitch_backward) {
  Tape& tape = *x_r.tape;
  const Tensor& a = tape.value(alpha);
  if (a.size() != 4) throw ShapeError("stitch: alpha must have 4 entries");
  const CrossStitchUnit unit(a[0], a[1], a[2], a[3]);
  auto [out_r, out_d] = stitch_forward(tape.value(x_r), tape.value(x_d), unit);

  // Both outputs feed one shared pullback; whichever backward rule runs first
  // stashes its upstream gradient and the second one fires the combined rule.
  struct Pending {
    std::vector<double> g_r, g_d;
    bool have_r = false, have_d = false;
  };
  auto pending = std::make_shared<Pending>();
  auto fire = [=](Tape& t) {
    const Tensor& xr = t.value(x_r);
    const Tensor& xd = t.value(x_d);
    Tensor gr = pending->have_r ? Tensor(xr.shape(), pending->g_r) : Tensor(xr.shape());
    Tensor gd = pending->have_d ? Tensor(xd.shape(), pending->g_d) : Tensor(xd.shape());
    const Tensor& av = t.value(alpha);
    const StitchGrads sg = backward_rule(gr, gd, xr, xd, CrossStitchUnit(av[0], av[1], av[2], av[3]));
    if (auto s = t.adjoint_sink(x_r); !s.empty())
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += sg.d_x_r[i];
    if (auto s = t.adjoint_sink(x_d); !s.empty())
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += sg.d_x_d[i];
    if (auto s = t.adjoint_sink(alpha); !s.empty())
      for (std::size_t i = 0; i < 4; ++i) s[i] += sg.d_alpha[i];
    *pending = Pending{};
  };

  // The D output is recorded after the R output, so its rule runs first in
  // reverse order; it only stashes. The R rule then fires. If the R output is
  // unreachable from the loss, the D rule fires instead (see below).
  Var r = tape.record(std::move(out_r), {x_r, x_d, alpha}, [=](Tape& t, std::span<const double> g) {
    pending->g_r.assign(g.begin(), g.end());
    pending->have_r = true;
    fire(t);
  });
  Var d = tape.record(std::move(out_d), {x_r, x_d, alpha, r}, [=](Tape& t, std::span<const double> g) {
    pending->g_d.assign(g.begin(), g.end());
    pending->have_d = true;
    // R's rule will run next only if R received an adjoint.
    if (t.adjoint(r).empty()) fire(t);
  });
  return {r, d};
}

}  // namespace mdcs
