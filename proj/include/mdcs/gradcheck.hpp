#pragma once

// Finite-difference checks of every differentiable op and of the full model.
// Each suite builds a scalar loss from a few parameter tensors, runs
// backward once, and compares each gradient entry against a central
// difference of the loss.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mdcs/autodiff.hpp"
#include "mdcs/cross_stitch.hpp"
#include "mdcs/network.hpp"
#include "mdcs/ops.hpp"
#include "mdcs/seed.hpp"

namespace mdcs {

inline constexpr double kGradcheckStep = 1e-6;
inline constexpr double kGradcheckTolerance = 1e-5;

struct SuiteResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool passed() const { return max_rel_error <= kGradcheckTolerance; }
};

/// One parameter entry to probe.
struct Probe {
  Tensor* tensor;
  std::size_t index;
};

using LossBuilder = std::function<Var(Tape&)>;

/// Compares backward gradients at each probe against central differences of
/// `build`. Gradient buffers of the probed tensors are reset first.
inline SuiteResult check_probes(const std::string& name, const std::vector<Probe>& probes, const LossBuilder& build,
                                double h = kGradcheckStep) {
  for (const Probe& p : probes) {
    p.tensor->set_requires_grad();
    p.tensor->zero_grad();
  }
  {
    Tape tape;
    tape.backward(build(tape));
  }
  auto loss_value = [&] {
    Tape tape;
    return tape.value(build(tape))[0];
  };
  SuiteResult r{name, 0.0, probes.size()};
  for (const Probe& p : probes) {
    const double analytic = std::as_const(*p.tensor).grad().empty() ? 0.0 : p.tensor->grad()[p.index];
    const double numeric = central_difference(loss_value, p.tensor->data()[p.index], h);
    const double err = relative_error(analytic, numeric);
    r.max_rel_error = std::isnan(err) ? INFINITY : std::max(r.max_rel_error, err);
  }
  return r;
}

inline std::vector<Probe> all_entries(std::initializer_list<Tensor*> tensors) {
  std::vector<Probe> out;
  for (Tensor* t : tensors)
    for (std::size_t i = 0; i < t->size(); ++i) out.push_back({t, i});
  return out;
}

namespace detail {

inline Tensor gauss_tensor(Shape shape, std::mt19937_64& rng, double stddev = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> d(0.0, stddev);
  for (double& v : t.data()) v = d(rng);
  return t;
}

/// Fixed random projection to a scalar so every output entry gets a distinct
/// upstream gradient.
inline Var project(Var x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return weighted_sum(x, gauss_tensor(x.tape->value(x).shape(), rng));
}

}  // namespace detail

inline SuiteResult gradcheck_separable_conv(std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 11));
  Tensor x = detail::gauss_tensor(Shape{2, 3, 6, 6}, rng);
  Tensor dw = detail::gauss_tensor(Shape{3, 3, 3}, rng);
  Tensor pw = detail::gauss_tensor(Shape{4, 3}, rng);
  Tensor b = detail::gauss_tensor(Shape{4}, rng);
  return check_probes("separable_conv2d", all_entries({&x, &dw, &pw, &b}), [&](Tape& t) {
    return detail::project(separable_conv2d(t.leaf(x), t.leaf(dw), t.leaf(pw), t.leaf(b)), seed);
  });
}

inline SuiteResult gradcheck_maxpool(std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 12));
  Tensor x = detail::gauss_tensor(Shape{2, 3, 4, 6}, rng);
  return check_probes("maxpool2d", all_entries({&x}),
                      [&](Tape& t) { return detail::project(maxpool2d(t.leaf(x)), seed); });
}

inline SuiteResult gradcheck_relu(std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 13));
  Tensor x = detail::gauss_tensor(Shape{3, 5, 5}, rng);
  for (double& v : x.data()) v += v < 0 ? -0.1 : 0.1;  // stay clear of the kink
  return check_probes("relu", all_entries({&x}), [&](Tape& t) { return detail::project(relu(t.leaf(x)), seed); });
}

inline SuiteResult gradcheck_dense(std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 14));
  Tensor x = detail::gauss_tensor(Shape{3, 7}, rng);
  Tensor w = detail::gauss_tensor(Shape{5, 7}, rng);
  Tensor b = detail::gauss_tensor(Shape{5}, rng);
  return check_probes("dense", all_entries({&x, &w, &b}), [&](Tape& t) {
    return detail::project(dense(t.leaf(x), t.leaf(w), t.leaf(b)), seed);
  });
}

inline SuiteResult gradcheck_softmax_ce(std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 15));
  Tensor z = detail::gauss_tensor(Shape{6, 2}, rng, 2.0);
  const std::vector<int> labels = {0, 1, 1, 0, 1, 0};
  return check_probes("softmax_cross_entropy", all_entries({&z}),
                      [&](Tape& t) { return softmax_cross_entropy(t.leaf(z), labels); });
}

inline SuiteResult gradcheck_cross_stitch(std::uint64_t seed, const StitchBackwardFn& rule = stitch_backward) {
  std::mt19937_64 rng(mix_seed(seed, 16));
  Tensor xr = detail::gauss_tensor(Shape{2, 3, 4, 4}, rng);
  Tensor xd = detail::gauss_tensor(Shape{2, 3, 4, 4}, rng);
  Tensor alpha = detail::gauss_tensor(Shape{4}, rng);
  return check_probes("cross_stitch", all_entries({&xr, &xd, &alpha}), [&](Tape& t) {
    auto [r, d] = stitch(t.leaf(xr), t.leaf(xd), t.leaf(alpha), rule);
    return add(detail::project(r, seed), detail::project(d, seed + 1));
  });
}

inline constexpr std::size_t kEndToEndSize = 32;
inline constexpr std::size_t kEndToEndProbes = 25;

/// Full ALL_STITCHES model on two random samples: every alpha entry of the
/// four units plus one random entry from each of 9 other parameter tensors.
inline SuiteResult gradcheck_end_to_end(std::uint64_t seed, const StitchBackwardFn& rule = stitch_backward) {
  DualBranchModel model = build_model(StitchMode::ALL_STITCHES, kEndToEndSize, seed);
  std::mt19937_64 rng(mix_seed(seed, 17));
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  for (CrossStitchUnit& u : model.stitches)
    for (double& a : u.alpha.data()) a += jitter(rng);  // move off the symmetric init
  ModelInput in{detail::gauss_tensor(Shape{2, 3, kEndToEndSize, kEndToEndSize}, rng),
                detail::gauss_tensor(Shape{2, 3, kEndToEndSize, kEndToEndSize}, rng)};
  const std::vector<int> labels = {0, 1};

  std::vector<ParamRef> params = model.parameters();
  std::vector<Probe> probes;
  std::vector<std::size_t> base;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].group == ParamGroup::STITCH) {
      for (std::size_t k = 0; k < 4; ++k) probes.push_back({params[i].tensor, k});
    } else {
      base.push_back(i);
    }
  }
  std::shuffle(base.begin(), base.end(), rng);
  base.resize(kEndToEndProbes - probes.size());
  std::sort(base.begin(), base.end());
  for (std::size_t i : base) {
    std::uniform_int_distribution<std::size_t> pick(0, params[i].tensor->size() - 1);
    probes.push_back({params[i].tensor, pick(rng)});
  }
  return check_probes("end_to_end", probes, [&](Tape& t) {
    return softmax_cross_entropy(model.forward(t, in, rule).logits, labels);
  });
}

/// Stitch pullback with the alpha gradient negated; used to confirm the
/// checks catch a sign error.
inline StitchGrads sign_flipped_stitch_backward(const Tensor& g_r, const Tensor& g_d, const Tensor& x_r,
                                                const Tensor& x_d, const CrossStitchUnit& unit) {
  StitchGrads g = stitch_backward(g_r, g_d, x_r, x_d, unit);
  for (double& a : g.d_alpha) a = -a;
  return g;
}

inline std::vector<SuiteResult> run_gradcheck(std::uint64_t seed, const StitchBackwardFn& rule = stitch_backward) {
  return {gradcheck_cross_stitch(seed, rule), gradcheck_separable_conv(seed), gradcheck_maxpool(seed),
          gradcheck_relu(seed),              gradcheck_dense(seed),           gradcheck_softmax_ce(seed),
          gradcheck_end_to_end(seed, rule)};
}

}  // namespace mdcs
