#pragma once

#include <algorithm>
#include <cmath>
#include <span>

namespace coral {

// Logistic sigmoid, stable for either sign of z (no overflow up to |z| = inf;
// underflows to exactly 0 or 1 past roughly |z| > 745).
inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(sigmoid(z)) = min(z, 0) - log1p(exp(-|z|)).
inline double log_sigmoid(double z) {
  return std::min(z, 0.0) - std::log1p(std::exp(-std::fabs(z)));
}

// log(1 - sigmoid(z)) = -max(z, 0) - log1p(exp(-|z|)).
inline double log_one_minus_sigmoid(double z) {
  return -std::max(z, 0.0) - std::log1p(std::exp(-std::fabs(z)));
}

// max-shifted log-sum-exp.
inline double logsumexp(std::span<const double> z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace coral
