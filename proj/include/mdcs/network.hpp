#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdcs/autodiff.hpp"
#include "mdcs/cross_stitch.hpp"
#include "mdcs/ops.hpp"
#include "mdcs/seed.hpp"
#include "mdcs/tensor.hpp"

namespace mdcs {

enum class StitchMode : std::uint32_t { RGB_ONLY = 0, FREQ_ONLY = 1, NO_STITCH = 2, ONE_STITCH = 3, ALL_STITCHES = 4 };

inline const char* mode_name(StitchMode m) {
  switch (m) {
    case StitchMode::RGB_ONLY: return "rgb";
    case StitchMode::FREQ_ONLY: return "freq";
    case StitchMode::NO_STITCH: return "none";
    case StitchMode::ONE_STITCH: return "one";
    case StitchMode::ALL_STITCHES: return "all";
  }
  return "?";
}

inline StitchMode parse_mode(const std::string& s) {
  if (s == "rgb") return StitchMode::RGB_ONLY;
  if (s == "freq") return StitchMode::FREQ_ONLY;
  if (s == "none") return StitchMode::NO_STITCH;
  if (s == "one") return StitchMode::ONE_STITCH;
  if (s == "all") return StitchMode::ALL_STITCHES;
  throw std::invalid_argument("unknown stitch mode '" + s + "' (expected rgb, freq, none, one or all)");
}

inline bool uses_spatial(StitchMode m) { return m != StitchMode::FREQ_ONLY; }
inline bool uses_frequency(StitchMode m) { return m != StitchMode::RGB_ONLY; }

inline std::size_t stitch_count(StitchMode m) {
  switch (m) {
    case StitchMode::ONE_STITCH: return 1;
    case StitchMode::ALL_STITCHES: return 4;
    default: return 0;
  }
}

/// Optimizer group of a parameter; stitch alphas train with their own rate.
enum class ParamGroup { BASE, STITCH };

struct ParamRef {
  Tensor* tensor;
  ParamGroup group;
  std::string name;
};

inline constexpr std::size_t kInputChannels = 3;
inline constexpr std::size_t kKernel = 3;
inline constexpr std::array<std::size_t, 4> kStageWidths = {16, 32, 64, 128};
inline constexpr std::size_t kBranchFeatures = 128;
inline constexpr std::size_t kClasses = 2;

struct SeparableBlock {
  Tensor depthwise;  // [C_in,k,k]
  Tensor pointwise;  // [C_out,C_in]
  Tensor bias;       // [C_out]
};

/// Four (separable conv -> relu -> 2x2 max pool) stages and a dense layer to
/// kBranchFeatures.
struct Backbone {
  std::array<SeparableBlock, 4> blocks;
  Tensor fc_weights;  // [128, 128 * (N/16)^2]
  Tensor fc_bias;     // [128]
};

/// Number of trainable scalars for a mode and input size:
///
///   backbone(N)  = sum_s (9 C_s + C_s C_{s+1} + C_{s+1}) + 128 F(N) + 128
///                = 12075 + 128 * 128 * (N/16)^2 + 128
///   two branches: 2 backbone(N) + (256 * 2 + 2) + 4 * stitches
///   one branch:     backbone(N) + (128 * 2 + 2)
inline std::size_t parameter_count(StitchMode mode, std::size_t input_size) {
  const std::size_t side = input_size / 16;
  std::size_t backbone = 0;
  std::size_t cin = kInputChannels;
  for (std::size_t w : kStageWidths) {
    backbone += kKernel * kKernel * cin + w * cin + w;
    cin = w;
  }
  backbone += kBranchFeatures * (kStageWidths.back() * side * side) + kBranchFeatures;
  const std::size_t branches = (uses_spatial(mode) ? 1 : 0) + (uses_frequency(mode) ? 1 : 0);
  const std::size_t head_in = branches * kBranchFeatures;
  return branches * backbone + head_in * kClasses + kClasses + 4 * stitch_count(mode);
}

/// Spatial and frequency inputs for a batch, each [B,3,N,N] and already
/// branch-normalized. The input of an absent branch may be left empty.
struct ModelInput {
  Tensor spatial;
  Tensor frequency;
};

/// Handles to intermediate nodes of one forward pass.
struct ForwardTrace {
  Var logits;
  std::optional<Var> spatial_features;
  std::optional<Var> frequency_features;
  std::vector<Var> spatial_stages;    // post-stitch output of each stage
  std::vector<Var> frequency_stages;  // post-stitch output of each stage
};

class DualBranchModel {
 public:
  StitchMode mode = StitchMode::ALL_STITCHES;
  std::size_t input_size = 64;
  std::uint64_t seed = 0;
  std::optional<Backbone> spatial;
  std::optional<Backbone> frequency;
  std::vector<CrossStitchUnit> stitches;
  Tensor classifier_weights;  // [2, 128 * branches]
  Tensor classifier_bias;     // [2]

  /// Stage index after which stitch unit `u` sits: stage u.
  bool stitched_after(std::size_t stage) const { return stage < stitches.size(); }

  /// Parameters in checkpoint order: spatial backbone, frequency backbone,
  /// classifier, then stitch alphas.
  std::vector<ParamRef> parameters() {
    std::vector<ParamRef> out;
    auto add_backbone = [&](Backbone& bb, const std::string& prefix) {
      for (std::size_t s = 0; s < bb.blocks.size(); ++s) {
        const std::string p = prefix + ".block" + std::to_string(s + 1);
        out.push_back({&bb.blocks[s].depthwise, ParamGroup::BASE, p + ".depthwise"});
        out.push_back({&bb.blocks[s].pointwise, ParamGroup::BASE, p + ".pointwise"});
        out.push_back({&bb.blocks[s].bias, ParamGroup::BASE, p + ".bias"});
      }
      out.push_back({&bb.fc_weights, ParamGroup::BASE, prefix + ".fc.weights"});
      out.push_back({&bb.fc_bias, ParamGroup::BASE, prefix + ".fc.bias"});
    };
    if (spatial) add_backbone(*spatial, "spatial");
    if (frequency) add_backbone(*frequency, "frequency");
    out.push_back({&classifier_weights, ParamGroup::BASE, "classifier.weights"});
    out.push_back({&classifier_bias, ParamGroup::BASE, "classifier.bias"});
    for (std::size_t u = 0; u < stitches.size(); ++u) {
      out.push_back({&stitches[u].alpha, ParamGroup::STITCH, "stitch" + std::to_string(u + 1) + ".alpha"});
    }
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (const ParamRef& p : parameters()) n += p.tensor->size();
    return n;
  }

  std::vector<std::array<double, 4>> alpha_snapshot() const {
    std::vector<std::array<double, 4>> out;
    for (const CrossStitchUnit& u : stitches) out.push_back(u.values());
    return out;
  }

  ForwardTrace forward(Tape& tape, const ModelInput& input,
                       const StitchBackwardFn& stitch_rule = stitch_backward) {
    ForwardTrace trace;
    std::optional<Var> r, d;
    if (spatial) r = tape.constant(check_input(input.spatial, "spatial"));
    if (frequency) d = tape.constant(check_input(input.frequency, "frequency"));
    if (r && d && tape.value(*r).dim(0) != tape.value(*d).dim(0)) {
      throw ShapeError("model_forward: spatial and frequency batch sizes differ");
    }
    for (std::size_t s = 0; s < kStageWidths.size(); ++s) {
      if (r) r = stage(tape, *r, spatial->blocks[s]);
      if (d) d = stage(tape, *d, frequency->blocks[s]);
      if (stitched_after(s)) {
        auto [rs, ds] = stitch(*r, *d, tape.leaf(stitches[s].alpha), stitch_rule);
        r = rs;
        d = ds;
      }
      if (r) trace.spatial_stages.push_back(*r);
      if (d) trace.frequency_stages.push_back(*d);
    }
    std::optional<Var> features;
    if (r) {
      trace.spatial_features = head(tape, *r, *spatial);
      features = trace.spatial_features;
    }
    if (d) {
      trace.frequency_features = head(tape, *d, *frequency);
      features = features ? concat_features(*features, *trace.frequency_features) : trace.frequency_features;
    }
    trace.logits = dense(*features, tape.leaf(classifier_weights), tape.leaf(classifier_bias));
    return trace;
  }

  Var logits(Tape& tape, const ModelInput& input) { return forward(tape, input).logits; }

 private:
  Tensor check_input(const Tensor& x, const char* which) const {
    require_rank(x, 4, which);
    if (x.dim(1) != kInputChannels || x.dim(2) != input_size || x.dim(3) != input_size) {
      throw ShapeError(std::string("model_forward: ") + which + " input must be [B,3," + std::to_string(input_size) +
                       "," + std::to_string(input_size) + "], got " + shape_string(x.shape()));
    }
    return x;
  }

  static Var stage(Tape& tape, Var x, SeparableBlock& blk) {
    Var y = separable_conv2d(x, tape.leaf(blk.depthwise), tape.leaf(blk.pointwise), tape.leaf(blk.bias));
    return maxpool2d(relu(y));
  }

  static Var head(Tape& tape, Var x, Backbone& bb) {
    return relu(dense(flatten(x), tape.leaf(bb.fc_weights), tape.leaf(bb.fc_bias)));
  }
};

namespace detail {

inline Tensor random_normal(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  t.set_requires_grad();
  return t;
}

inline Tensor zeros_param(Shape shape) {
  Tensor t(std::move(shape));
  t.set_requires_grad();
  return t;
}

inline Backbone make_backbone(std::size_t input_size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Backbone bb;
  std::size_t cin = kInputChannels;
  for (std::size_t s = 0; s < kStageWidths.size(); ++s) {
    const std::size_t cout = kStageWidths[s];
    // Depthwise: variance preserving; pointwise feeds a ReLU: He.
    bb.blocks[s].depthwise =
        random_normal(Shape{cin, kKernel, kKernel}, std::sqrt(1.0 / static_cast<double>(kKernel * kKernel)), rng);
    bb.blocks[s].pointwise = random_normal(Shape{cout, cin}, std::sqrt(2.0 / static_cast<double>(cin)), rng);
    bb.blocks[s].bias = zeros_param(Shape{cout});
    cin = cout;
  }
  const std::size_t side = input_size / 16;
  const std::size_t flat = kStageWidths.back() * side * side;
  bb.fc_weights = random_normal(Shape{kBranchFeatures, flat}, std::sqrt(2.0 / static_cast<double>(flat)), rng);
  bb.fc_bias = zeros_param(Shape{kBranchFeatures});
  return bb;
}

}  // namespace detail

/// Deterministic model for (mode, input_size, seed). Each branch and the
/// classifier draw from their own seed stream, so a branch's weights do not
/// depend on which other components the mode includes.
inline DualBranchModel build_model(StitchMode mode, std::size_t input_size, std::uint64_t seed) {
  if (input_size == 0 || input_size % 16 != 0) {
    throw std::invalid_argument("build_model: input size must be a positive multiple of 16, got " +
                                std::to_string(input_size));
  }
  DualBranchModel m;
  m.mode = mode;
  m.input_size = input_size;
  m.seed = seed;
  if (uses_spatial(mode)) m.spatial = detail::make_backbone(input_size, mix_seed(seed, 1));
  if (uses_frequency(mode)) m.frequency = detail::make_backbone(input_size, mix_seed(seed, 2));
  const std::size_t head_in = ((m.spatial ? 1 : 0) + (m.frequency ? 1 : 0)) * kBranchFeatures;
  std::mt19937_64 rng(mix_seed(seed, 3));
  m.classifier_weights =
      detail::random_normal(Shape{kClasses, head_in}, std::sqrt(1.0 / static_cast<double>(head_in)), rng);
  m.classifier_bias = detail::zeros_param(Shape{kClasses});
  for (std::size_t u = 0; u < stitch_count(mode); ++u) m.stitches.push_back(init_unit());
  return m;
}

}  // namespace mdcs
