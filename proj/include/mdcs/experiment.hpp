#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdcs/checkpoint.hpp"
#include "mdcs/data_synth.hpp"
#include "mdcs/metrics.hpp"
#include "mdcs/network.hpp"
#include "mdcs/pipeline.hpp"
#include "mdcs/training.hpp"

namespace mdcs {

/// Outcome of training one configuration and scoring it on the test split.
struct RunResult {
  StitchMode mode = StitchMode::ALL_STITCHES;
  Transform transform = Transform::DCT;
  Checkpoint best;  // best-validation model and the normalization it expects
  std::vector<EpochRecord> records;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  EvalReport test;
  bool diverged = false;
  std::string message;
};

/// Trains `mode` on prepared features; the model is seeded with cfg.seed.
inline RunResult run_configuration(const PreparedData& data, StitchMode mode, std::size_t input_size,
                                   const TrainingConfig& cfg, const EpochCallback& on_epoch = {}) {
  RunResult out;
  out.mode = mode;
  out.transform = data.pipeline.transform;
  auto tr = train(build_model(mode, input_size, cfg.seed), data.train, data.val, cfg, on_epoch);
  out.records = std::move(tr.records);
  out.best_epoch = tr.best_epoch;
  out.best_val_acc = tr.best_val_acc;
  out.diverged = tr.diverged;
  out.message = std::move(tr.message);
  out.best = Checkpoint{std::move(tr.best_model), data.pipeline};
  if (out.best_epoch == 0) throw std::runtime_error("training produced no usable epoch: " + out.message);
  if (data.test.size() > 0) {
    const Predictions p = predict(out.best.model, data.test, cfg.batch_size);
    out.test = evaluate_scores(p.fake_scores, data.test.labels());
  }
  return out;
}

inline RunResult run_configuration(const Corpus& corpus, StitchMode mode, Transform transform,
                                   const TrainingConfig& cfg, const EpochCallback& on_epoch = {}) {
  return run_configuration(prepare_data(corpus, transform), mode, corpus.image_size, cfg, on_epoch);
}

struct AblationRow {
  std::string study;  // "modes" or "transforms"
  StitchMode mode;
  Transform transform;
  std::optional<double> test_auc;
  double test_acc = 0.0;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
};

using RunCallback = std::function<void(const RunResult&)>;

/// The five stitch modes on DCT features, then the three transforms under
/// ALL_STITCHES. The DCT/ALL_STITCHES run appears in both studies but is
/// trained once.
inline std::vector<AblationRow> run_ablation(const Corpus& corpus, const TrainingConfig& cfg,
                                             const RunCallback& on_run = {}) {
  std::vector<AblationRow> rows;
  std::map<std::pair<StitchMode, Transform>, AblationRow> done;
  std::map<Transform, PreparedData> features;
  auto run = [&](const std::string& study, StitchMode mode, Transform t) {
    const auto key = std::make_pair(mode, t);
    if (auto it = done.find(key); it != done.end()) {
      AblationRow row = it->second;
      row.study = study;
      rows.push_back(row);
      return;
    }
    if (!features.count(t)) features.emplace(t, prepare_data(corpus, t));
    const RunResult r = run_configuration(features.at(t), mode, corpus.image_size, cfg);
    if (on_run) on_run(r);
    AblationRow row{study, mode, t, r.test.auc, r.test.accuracy, r.best_epoch, r.best_val_acc};
    done.emplace(key, row);
    rows.push_back(row);
  };
  for (StitchMode m : {StitchMode::RGB_ONLY, StitchMode::FREQ_ONLY, StitchMode::NO_STITCH, StitchMode::ONE_STITCH,
                       StitchMode::ALL_STITCHES})
    run("modes", m, Transform::DCT);
  features.erase(Transform::DCT);
  for (Transform t : {Transform::DCT, Transform::FFT_AMPLITUDE, Transform::DWT_HAAR}) {
    run("transforms", StitchMode::ALL_STITCHES, t);
    features.erase(t);
  }
  return rows;
}

inline void write_ablation_csv(std::ostream& os, const std::vector<AblationRow>& rows) {
  os << "study,mode,transform,test_auc,test_acc,best_epoch,best_val_acc\n" << std::setprecision(17);
  for (const AblationRow& r : rows) {
    os << r.study << ',' << mode_name(r.mode) << ',' << transform_name(r.transform) << ',';
    if (r.test_auc) os << *r.test_auc;
    else os << "undefined";
    os << ',' << r.test_acc << ',' << r.best_epoch << ',' << r.best_val_acc << '\n';
  }
}

}  // namespace mdcs
