#pragma once

// Turns corpus samples into normalized model inputs: the spatial branch sees
// the RGB image, the frequency branch sees the per-channel log-scaled
// spectrum; each branch is standardized with statistics from the training
// split only.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mdcs/data_synth.hpp"
#include "mdcs/network.hpp"
#include "mdcs/spectral.hpp"

namespace mdcs {

struct FeaturePipeline {
  Transform transform = Transform::DCT;
  BranchStats spatial;
  BranchStats frequency;
};

/// Per-sample branch inputs for one split; a TrainingSet for DualBranchModel.
class FeatureSet {
 public:
  FeatureSet() = default;

  /// Raw (unnormalized) features. Spectra are computed in parallel; each
  /// sample's result depends only on that sample.
  FeatureSet(const std::vector<Sample>& samples, Transform transform) {
    const std::size_t n = samples.size();
    spatial_.resize(n);
    frequency_.resize(n);
    labels_.resize(n);
    groups_.resize(n);
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      const Sample& s = samples[static_cast<std::size_t>(i)];
      spatial_[static_cast<std::size_t>(i)] = s.image;
      frequency_[static_cast<std::size_t>(i)] = spectral_feature(s.image, transform).map;
    }
    for (std::size_t i = 0; i < n; ++i) {
      labels_[i] = static_cast<int>(samples[i].label);
      groups_[i] = samples[i].group_id;
    }
  }

  std::size_t size() const { return labels_.size(); }
  std::span<const int> labels() const { return labels_; }
  std::span<const std::int64_t> groups() const { return groups_; }
  std::span<const Tensor> spatial() const { return spatial_; }
  std::span<const Tensor> frequency() const { return frequency_; }

  void normalize(const FeaturePipeline& p) {
    for (Tensor& t : spatial_) t = apply_normalization(t, p.spatial);
    for (Tensor& t : frequency_) t = apply_normalization(t, p.frequency);
  }

  ModelInput batch(std::span<const std::size_t> idx) const {
    return {stack(spatial_, idx), stack(frequency_, idx)};
  }

 private:
  static Tensor stack(const std::vector<Tensor>& items, std::span<const std::size_t> idx) {
    if (idx.empty()) throw std::invalid_argument("FeatureSet::batch: empty index list");
    const Tensor& first = items.at(idx.front());
    Shape shape{idx.size()};
    shape.insert(shape.end(), first.shape().begin(), first.shape().end());
    Tensor out(shape);
    const std::size_t per = first.size();
    for (std::size_t b = 0; b < idx.size(); ++b) std::copy_n(items.at(idx[b]).raw(), per, out.raw() + b * per);
    return out;
  }

  std::vector<Tensor> spatial_;
  std::vector<Tensor> frequency_;
  std::vector<int> labels_;
  std::vector<std::int64_t> groups_;
};

inline FeaturePipeline fit_pipeline(const FeatureSet& raw_train, Transform transform) {
  return {transform, fit_branch_stats(raw_train.spatial(), Branch::SPATIAL),
          fit_branch_stats(raw_train.frequency(), Branch::FREQUENCY)};
}

inline FeatureSet make_features(const std::vector<Sample>& samples, const FeaturePipeline& p) {
  FeatureSet f(samples, p.transform);
  f.normalize(p);
  return f;
}

/// Normalized train/val/test features with statistics fitted on train.
struct PreparedData {
  FeaturePipeline pipeline;
  FeatureSet train;
  FeatureSet val;
  FeatureSet test;
};

inline PreparedData prepare_data(const Corpus& corpus, Transform transform) {
  if (corpus.train.empty()) throw std::invalid_argument("prepare_data: empty training split");
  PreparedData d;
  d.train = FeatureSet(corpus.train, transform);
  d.pipeline = fit_pipeline(d.train, transform);
  d.train.normalize(d.pipeline);
  d.val = make_features(corpus.val, d.pipeline);
  d.test = make_features(corpus.test, d.pipeline);
  return d;
}

}  // namespace mdcs
