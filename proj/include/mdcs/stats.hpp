#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace mdcs {

struct TwoSampleTest {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;  // two-sided
};

inline double sample_mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sample_variance(std::span<const double> x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size() - 1);
}

/// Welch's unequal-variance t-test.
inline TwoSampleTest welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t_test: need at least two samples per group");
  TwoSampleTest r;
  r.mean_a = sample_mean(a);
  r.mean_b = sample_mean(b);
  const double va = sample_variance(a, r.mean_a) / static_cast<double>(a.size());
  const double vb = sample_variance(b, r.mean_b) / static_cast<double>(b.size());
  const double se2 = va + vb;
  if (se2 == 0.0) {
    r.t = r.mean_a == r.mean_b ? 0.0 : INFINITY;
    r.dof = static_cast<double>(a.size() + b.size() - 2);
    r.p_value = r.mean_a == r.mean_b ? 1.0 : 0.0;
    return r;
  }
  r.t = (r.mean_a - r.mean_b) / std::sqrt(se2);
  r.dof = se2 * se2 /
          (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(r.dof);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

}  // namespace mdcs
