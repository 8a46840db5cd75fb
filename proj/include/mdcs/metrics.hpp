#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdcs {

inline constexpr double kDecisionThreshold = 0.5;

struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

/// Hard decisions at `threshold` (score >= threshold means FAKE, label 1).
inline Confusion confusion(std::span<const double> scores, std::span<const int> labels,
                           double threshold = kDecisionThreshold) {
  if (scores.size() != labels.size()) throw std::invalid_argument("confusion: scores and labels differ in length");
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted_fake = scores[i] >= threshold;
    const bool fake = labels[i] == 1;
    if (predicted_fake && fake) ++c.tp;
    else if (!predicted_fake && !fake) ++c.tn;
    else if (predicted_fake) ++c.fp;
    else ++c.fn;
  }
  return c;
}

inline double accuracy(std::span<const double> scores, std::span<const int> labels,
                       double threshold = kDecisionThreshold) {
  if (scores.empty()) throw std::invalid_argument("accuracy: empty input");
  const Confusion c = confusion(scores, labels, threshold);
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(scores.size());
}

/// Thrown when AUC is requested for input that lacks one of the classes.
class UndefinedAuc : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Mann-Whitney AUC from average ranks: the fraction of (positive, negative)
/// pairs ordered correctly, ties counting one half.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: scores and labels differ in length");
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l == 1 ? 1 : 0;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedAuc("auc: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Ranks are doubled so tied averages stay integral: 2 * rank = first + last
  // with 1-based positions.
  std::uint64_t twice_rank_sum_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const std::uint64_t twice_rank = (i + 1) + (j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) twice_rank_sum_pos += twice_rank;
    }
    i = j + 1;
  }
  // 2U = 2 R_pos - n_pos (n_pos + 1)
  const std::uint64_t twice_u = twice_rank_sum_pos - static_cast<std::uint64_t>(n_pos) * (n_pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct GroupScores {
  std::vector<std::int64_t> group_ids;  // ascending
  std::vector<double> scores;
  std::vector<int> labels;  // label of the group's first sample
};

/// Mean score per group id. Groups are reported in ascending id order and the
/// within-group sum runs in ascending sample index order.
inline GroupScores group_average_scores(std::span<const double> scores, std::span<const std::int64_t> group_ids,
                                        std::span<const int> labels = {}) {
  if (scores.size() != group_ids.size()) {
    throw std::invalid_argument("group_average_scores: scores and group ids differ in length");
  }
  if (!labels.empty() && labels.size() != scores.size()) {
    throw std::invalid_argument("group_average_scores: labels differ in length");
  }
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
    int label = 0;
  };
  std::map<std::int64_t, Acc> acc;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto [it, inserted] = acc.try_emplace(group_ids[i]);
    if (inserted && !labels.empty()) it->second.label = labels[i];
    it->second.sum += scores[i];
    ++it->second.n;
  }
  GroupScores out;
  for (const auto& [id, a] : acc) {
    out.group_ids.push_back(id);
    out.scores.push_back(a.sum / static_cast<double>(a.n));
    out.labels.push_back(a.label);
  }
  return out;
}

struct EvalReport {
  double accuracy = 0.0;
  std::optional<double> auc;  // empty when only one class is present
  Confusion counts;
  std::size_t n_samples = 0;
};

inline EvalReport evaluate_scores(std::span<const double> scores, std::span<const int> labels) {
  EvalReport r;
  r.n_samples = scores.size();
  r.accuracy = accuracy(scores, labels);
  r.counts = confusion(scores, labels);
  try {
    r.auc = auc(scores, labels);
  } catch (const UndefinedAuc&) {
    r.auc.reset();
  }
  return r;
}

}  // namespace mdcs
