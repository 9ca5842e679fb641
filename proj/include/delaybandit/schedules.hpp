#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

// Tuning constants and round-indexed learning-rate schedules:
//
//   eta_t^{-1}   = sqrt(t + eta_0)
//   gamma_t^{-1} = sqrt((D_t + gamma_0) / log K)
//
// with eta_0 = 10 d_max + d_max^2 / (K^{1/3} log K)^2 and
// gamma_0 = 24^2 d_max^2 K^{2/3} log K. Logs are natural.

namespace delaybandit {

struct TuningConstants {
  int arms = 0;
  int d_max = 0;
  double eta0 = 0.0;
  double gamma0 = 0.0;
};

inline TuningConstants tuning_constants(int arms, int d_max) {
  if (arms < 2)
    throw std::invalid_argument("tuning_constants: need K >= 2 (log K > 0)");
  if (d_max < 0) throw std::invalid_argument("tuning_constants: d_max < 0");
  double k = double(arms);
  double d = double(d_max);
  double logk = std::log(k);
  double kcube = std::cbrt(k);
  TuningConstants c;
  c.arms = arms;
  c.d_max = d_max;
  c.eta0 = 10.0 * d + d * d / ((kcube * logk) * (kcube * logk));
  c.gamma0 = 576.0 * d * d * kcube * kcube * logk;
  return c;
}

inline double eta_inv(int t, const TuningConstants& c) {
  if (t < 1) throw std::invalid_argument("eta_inv: t >= 1 required");
  return std::sqrt(double(t) + c.eta0);
}

// D_t is the cumulative outstanding-observation count sum_{s<=t} sigma_s.
inline double gamma_inv(double cum_outstanding, const TuningConstants& c) {
  if (cum_outstanding < 0.0)
    throw std::invalid_argument("gamma_inv: negative cumulative count");
  return std::sqrt((cum_outstanding + c.gamma0) / std::log(double(c.arms)));
}

// sigma_t = #{ s < t : s + d_s >= t }. An observation arriving at the end
// of round t still counts as outstanding at round t.
inline int outstanding_count(int t, const std::vector<int>& delays) {
  if (t < 1 || std::size_t(t) > delays.size() + 1)
    throw std::invalid_argument("outstanding_count: delays unknown for s < t");
  int n = 0;
  for (int s = 1; s < t; ++s)
    if (s + delays[std::size_t(s - 1)] >= t) ++n;
  return n;
}

// Per-arm negentropy rates gamma_{t,i}^{-1} = gamma_t^{-1} sqrt(Delta_i).
// The best arm has no defined gap; callers supply a positive surrogate.
inline std::vector<double> asymmetric_gamma_inv(double cum_outstanding,
                                                const TuningConstants& c,
                                                const std::vector<double>& gaps) {
  double base = gamma_inv(cum_outstanding, c);
  std::vector<double> out;
  out.reserve(gaps.size());
  for (double g : gaps) {
    if (!(g > 0.0))
      throw std::invalid_argument("asymmetric_gamma_inv: gaps must be positive");
    out.push_back(base * std::sqrt(g));
  }
  return out;
}

}  // namespace delaybandit
