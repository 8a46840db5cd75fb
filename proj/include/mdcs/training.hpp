#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdcs/autodiff.hpp"
#include "mdcs/metrics.hpp"
#include "mdcs/network.hpp"
#include "mdcs/ops.hpp"

namespace mdcs {

struct TrainingConfig {
  double base_lr = 2e-4;
  double stitch_lr = 1e-3;
  std::size_t batch_size = 32;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double plateau_factor = 0.2;
  std::size_t plateau_patience = 3;
  std::size_t max_epochs = 10;
  std::uint64_t seed = 7;

  void validate() const {
    if (!(base_lr > 0.0) || !(stitch_lr > 0.0)) throw std::invalid_argument("learning rates must be positive");
    if (!(plateau_factor > 0.0) || !(adam_eps > 0.0)) throw std::invalid_argument("plateau factor and eps must be positive");
    if (plateau_patience < 1) throw std::invalid_argument("plateau patience must be at least 1");
    if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  }
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// First and second moments per parameter tensor plus the shared timestep.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update. STITCH-group parameters step with
/// `stitch_lr`, everything else with `base_lr`. Missing grad buffers count as
/// zero. Nothing is modified if any gradient is non-finite.
inline void adam_step(std::span<const ParamRef> params, AdamState& state, double base_lr, double stitch_lr,
                      const TrainingConfig& cfg) {
  for (const ParamRef& p : params) {
    for (double g : p.tensor->grad()) {
      if (!std::isfinite(g)) throw NonFiniteGradient("adam_step: non-finite gradient in " + p.name);
    }
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), {});
    state.v.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].tensor->size(), 0.0);
      state.v[i].assign(params[i].tensor->size(), 0.0);
    }
    state.t = 0;
  }
  ++state.t;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = *params[i].tensor;
    const double lr = params[i].group == ParamGroup::STITCH ? stitch_lr : base_lr;
    const auto g = std::as_const(w).grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g.empty() ? 0.0 : g[k];
      m[k] = b1 * m[k] + (1.0 - b1) * gk;
      v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      w[k] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

/// Streak tracker for the plateau rule. An epoch improves only if its loss is
/// strictly below the best loss seen before it.
struct PlateauState {
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale_epochs = 0;

  /// Feeds one validation loss; true when the rate should be reduced now.
  bool update(double val_loss, std::size_t patience) {
    if (val_loss < best) {
      best = val_loss;
      stale_epochs = 0;
      return false;
    }
    if (++stale_epochs >= patience) {
      stale_epochs = 0;
      return true;
    }
    return false;
  }
};

/// Rate to use after the last epoch of `history`: `current_lr` times the
/// plateau factor if the rule fires at that epoch, otherwise unchanged.
inline double plateau_schedule(std::span<const double> history, double current_lr, const TrainingConfig& cfg) {
  if (history.empty()) throw std::invalid_argument("plateau_schedule: empty history");
  PlateauState st;
  bool fired = false;
  for (double loss : history) fired = st.update(loss, cfg.plateau_patience);
  return fired ? current_lr * cfg.plateau_factor : current_lr;
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double base_lr = 0.0;
  double stitch_lr = 0.0;
  std::vector<std::array<double, 4>> alphas;
};

/// Index of the best epoch by validation accuracy; ties go to the earliest.
inline std::size_t select_best_epoch(std::span<const double> val_accuracies) {
  if (val_accuracies.empty()) throw std::invalid_argument("select_best_epoch: no epochs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_accuracies.size(); ++i) {
    if (val_accuracies[i] > val_accuracies[best]) best = i;
  }
  return best;
}

template <typename D>
concept TrainingSet = requires(const D& d, std::span<const std::size_t> idx) {
  { d.size() } -> std::convertible_to<std::size_t>;
  { d.labels() } -> std::convertible_to<std::span<const int>>;
  d.batch(idx);
};

template <typename M, typename D>
concept TrainableOn = TrainingSet<D> && requires(M& m, Tape& tape, const D& d, std::span<const std::size_t> idx) {
  { m.parameters() } -> std::convertible_to<std::vector<ParamRef>>;
  { m.logits(tape, d.batch(idx)) } -> std::same_as<Var>;
};

struct Predictions {
  double mean_loss = 0.0;
  std::vector<double> fake_scores;  // softmax probability of class 1
};

/// Mean cross-entropy and FAKE probabilities over a whole split.
template <typename Model, typename Dataset>
  requires TrainableOn<Model, Dataset>
Predictions predict(Model& model, const Dataset& data, std::size_t batch_size) {
  Predictions out;
  out.fake_scores.reserve(data.size());
  const auto labels = data.labels();
  std::vector<std::size_t> idx;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    Tape tape;
    const Var z = model.logits(tape, data.batch(idx));
    const Var loss = softmax_cross_entropy(z, labels.subspan(start, end - start));
    loss_sum += tape.value(loss)[0] * static_cast<double>(end - start);
    const Tensor p = softmax_rows(tape.value(z));
    for (std::size_t b = 0; b < end - start; ++b) out.fake_scores.push_back(p[b * 2 + 1]);
  }
  out.mean_loss = loss_sum / static_cast<double>(data.size());
  return out;
}

template <typename Model>
struct TrainResult {
  Model best_model;
  std::size_t best_epoch = 0;  // 1-based; 0 if no epoch completed
  double best_val_acc = -1.0;
  std::vector<EpochRecord> records;
  bool diverged = false;
  std::string message;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam training with plateau scheduling. Returns a copy of the
/// model at the epoch with the highest validation accuracy (earliest on ties).
/// Fully deterministic for a fixed config seed.
template <typename Model, typename Dataset>
  requires TrainableOn<Model, Dataset>
TrainResult<Model> train(Model model, const Dataset& train_set, const Dataset& val_set, const TrainingConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (train_set.size() == 0) throw std::invalid_argument("train: empty training split");
  if (val_set.size() == 0) throw std::invalid_argument("train: empty validation split");

  TrainResult<Model> result;
  result.best_model = model;
  std::vector<ParamRef> params = model.parameters();
  for (const ParamRef& p : params) p.tensor->zero_grad();
  AdamState adam;
  PlateauState plateau;
  double base_lr = cfg.base_lr, stitch_lr = cfg.stitch_lr;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto train_labels = train_set.labels();
  std::vector<int> batch_labels;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      batch_labels.clear();
      for (std::size_t i : idx) batch_labels.push_back(train_labels[i]);
      Tape tape;
      const Var loss = softmax_cross_entropy(model.logits(tape, train_set.batch(idx)), batch_labels);
      const double lv = tape.value(loss)[0];
      if (!std::isfinite(lv)) {
        result.diverged = true;
        result.message = "non-finite training loss at epoch " + std::to_string(epoch);
        return result;
      }
      tape.backward(loss);
      try {
        adam_step(params, adam, base_lr, stitch_lr, cfg);
      } catch (const NonFiniteGradient& e) {
        result.diverged = true;
        result.message = std::string(e.what()) + " at epoch " + std::to_string(epoch);
        return result;
      }
      for (const ParamRef& p : params) p.tensor->zero_grad();
      loss_sum += lv * static_cast<double>(end - start);
    }

    const Predictions val = predict(model, val_set, cfg.batch_size);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_loss = val.mean_loss;
    rec.val_acc = accuracy(val.fake_scores, val_set.labels());
    rec.base_lr = base_lr;
    rec.stitch_lr = stitch_lr;
    if constexpr (requires { model.alpha_snapshot(); }) rec.alphas = model.alpha_snapshot();
    result.records.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (!std::isfinite(rec.val_loss)) {
      result.diverged = true;
      result.message = "non-finite validation loss at epoch " + std::to_string(epoch);
      return result;
    }
    if (rec.val_acc > result.best_val_acc) {
      result.best_val_acc = rec.val_acc;
      result.best_epoch = epoch;
      result.best_model = model;
    }
    if (plateau.update(rec.val_loss, cfg.plateau_patience)) {
      base_lr *= cfg.plateau_factor;
      stitch_lr *= cfg.plateau_factor;
    }
  }
  return result;
}

/// Metrics log. Columns: epoch,train_loss,val_loss,val_acc,base_lr,stitch_lr
/// followed by alpha_rr_u,alpha_rd_u,alpha_dr_u,alpha_dd_u for each stitch
/// unit u = 1..n_units.
inline void write_metrics_csv(std::ostream& os, std::span<const EpochRecord> records, std::size_t n_units) {
  os << "epoch,train_loss,val_loss,val_acc,base_lr,stitch_lr";
  for (std::size_t u = 1; u <= n_units; ++u) {
    for (const char* k : {"rr", "rd", "dr", "dd"}) os << ",alpha_" << k << '_' << u;
  }
  os << '\n';
  os << std::setprecision(17);
  for (const EpochRecord& r : records) {
    os << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_acc << ',' << r.base_lr << ','
       << r.stitch_lr;
    for (std::size_t u = 0; u < n_units; ++u) {
      for (std::size_t k = 0; k < 4; ++k) os << ',' << (u < r.alphas.size() ? r.alphas[u][k] : 0.0);
    }
    os << '\n';
  }
}

}  // namespace mdcs
