#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "delaybandit/engine.hpp"
#include "delaybandit/environments.hpp"
#include "delaybandit/schedules.hpp"

// Regret accounting, bound overlays (shape references with unit constants,
// not claims), and empirical checks of the drift, outstanding-count, and
// arrival-count inequalities.

namespace delaybandit {

// sqrt(tK) + sqrt(D_t log K) + d_max K^{1/3} log K, unit constants.
inline double adversarial_overlay(double t, int arms, double cum_outstanding,
                                  int d_max) {
  if (t < 0.0 || cum_outstanding < 0.0 || d_max < 0)
    throw std::invalid_argument("adversarial_overlay: negative input");
  double k = double(arms);
  double logk = std::log(k);
  return std::sqrt(t * k) + std::sqrt(cum_outstanding * logk) +
         double(d_max) * std::cbrt(k) * logk;
}

// sum_{i != i*} (log t / Delta_i + sigma_max / (Delta_i log K))
//   + d_max K^{1/3} log K, unit constants.
inline double stochastic_overlay(double t, const std::vector<double>& gaps,
                                 int best_arm, double sigma_max, int d_max,
                                 int arms) {
  double logk = std::log(double(arms));
  double sum = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (int(i) == best_arm) continue;
    if (!(gaps[i] > 0.0))
      throw std::invalid_argument("stochastic_overlay: non-positive gap");
    sum += std::log(std::max(t, 1.0)) / gaps[i] + sigma_max / (gaps[i] * logk);
  }
  return sum + double(d_max) * std::cbrt(double(arms)) * logk;
}

// Literal constants from the detailed bound, exposed for reference.
inline double paper_constants_overlay(double t, const std::vector<double>& gaps,
                                      int best_arm, double sigma_max,
                                      double a_max, const TuningConstants& c) {
  double logk = std::log(double(c.arms));
  double sum = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (int(i) == best_arm) continue;
    sum += 56.0 * 56.0 / gaps[i] *
           std::log(t / std::max(c.eta0, 1e-300) + 1.0);
    sum += 256.0 * sigma_max / (gaps[i] * logk);
  }
  sum += 2048.0 * a_max * logk;
  sum += 16.0 * std::sqrt(c.eta0 * double(c.arms - 1));
  sum += 8.0 * std::sqrt(c.gamma0 * logk);
  sum += 4.0 * double(c.d_max);
  return sum;
}

struct DriftReport {
  double max_ratio = 0.0;
  int witness_t = 0, witness_s = 0, witness_arm = 0;
  bool pass = false;
};

// max over s <= t, t - s <= d_max, of x_{t,i} / x_{s,i}; passes iff
// <= 2 + 1e-6. Uses a rolling window of d_max + 1 snapshot rows.
inline DriftReport drift_check(const RunTrace& trace, int d_max) {
  if (trace.snapshots.size() != trace.rounds.size())
    throw std::invalid_argument("drift_check: trace recorded without snapshots");
  DriftReport rep;
  rep.max_ratio = trace.rounds.empty() ? 0.0 : 1.0;
  std::deque<const std::vector<double>*> window;
  for (std::size_t t = 0; t < trace.snapshots.size(); ++t) {
    window.push_back(&trace.snapshots[t]);
    if (int(window.size()) > d_max + 1) window.pop_front();
    const std::vector<double>& xt = trace.snapshots[t];
    for (std::size_t w = 0; w + 1 < window.size(); ++w) {
      const std::vector<double>& xs = *window[w];
      for (std::size_t i = 0; i < xt.size(); ++i) {
        double r = xt[i] / xs[i];
        if (r > rep.max_ratio) {
          rep.max_ratio = r;
          rep.witness_t = int(t + 1);
          rep.witness_s = int(t + 1 - (window.size() - 1 - w));
          rep.witness_arm = int(i);
        }
      }
    }
  }
  rep.pass = rep.max_ratio <= 2.0 + 1e-6;
  return rep;
}

inline int sigma_max_of(const std::vector<int>& delays) {
  int best = 0;
  for (int t = 1; t <= int(delays.size()); ++t)
    best = std::max(best, outstanding_count(t, delays));
  return best;
}

struct SigmaMaxReport {
  int sigma_max = 0;
  int subset_minimum = 0;
  bool exhaustive = false;
  bool pass = false;
};

// sigma_max <= min_S { |S| + max_{s not in S} d_s }, brute-forced over all
// 2^T subsets for T <= 20; larger T falls back to the greedy form
// (skip the j largest delays), reported as non-exhaustive.
inline SigmaMaxReport sigma_max_bound_check(const std::vector<int>& delays) {
  const int T = int(delays.size());
  SigmaMaxReport rep;
  rep.sigma_max = sigma_max_of(delays);
  if (T <= 20) {
    rep.exhaustive = true;
    int best = std::numeric_limits<int>::max();
    for (std::uint32_t mask = 0; mask < (1u << T); ++mask) {
      int skipped = 0, dmax_rest = 0;
      for (int t = 0; t < T; ++t) {
        if (mask & (1u << t))
          ++skipped;
        else
          dmax_rest = std::max(dmax_rest, delays[std::size_t(t)]);
      }
      best = std::min(best, skipped + dmax_rest);
    }
    rep.subset_minimum = best;
  } else {
    std::vector<int> sorted = delays;
    std::sort(sorted.begin(), sorted.end(), std::greater<int>());
    int best = std::numeric_limits<int>::max();
    for (int j = 0; j <= T; ++j)
      best = std::min(best, j + (j < T ? sorted[std::size_t(j)] : 0));
    rep.subset_minimum = best;
  }
  rep.pass = rep.sigma_max <= rep.subset_minimum;
  return rep;
}

// Greedy form of the same minimum; the optimal skip set is always a set
// of largest-delay rounds, so this must agree with the brute force.
inline int greedy_skip_minimum(const std::vector<int>& delays) {
  std::vector<int> sorted = delays;
  std::sort(sorted.begin(), sorted.end(), std::greater<int>());
  int best = std::numeric_limits<int>::max();
  for (int j = 0; j <= int(delays.size()); ++j)
    best = std::min(best, j + (j < int(delays.size()) ? sorted[std::size_t(j)] : 0));
  return best;
}

struct ArrivalsReport {
  bool pass = false;
  int first_violation_t = 0;
  long long lhs_at_T = 0, rhs_at_T = 0;
};

// sum_{s<=t} sigma_s >= sum_{s<=t} a_s (a_s - 1) / 2 at every prefix;
// an exact integer identity, zero tolerance.
inline ArrivalsReport arrivals_inequality_check(const RunTrace& trace) {
  ArrivalsReport rep;
  long long lhs = 0, rhs = 0;
  rep.pass = true;
  for (const RoundRecord& r : trace.rounds) {
    lhs += r.sigma;
    rhs += (long long)(r.arrivals) * (r.arrivals - 1) / 2;
    if (lhs < rhs && rep.pass) {
      rep.pass = false;
      rep.first_violation_t = r.t;
    }
  }
  rep.lhs_at_T = lhs;
  rep.rhs_at_T = rhs;
  return rep;
}

struct RegretCurve {
  std::vector<double> cumulative;    // per-round cumulative pseudo-regret
  std::vector<double> instantaneous;
  std::vector<double> overlay_adv;
  std::vector<double> overlay_stoch;  // empty in the oblivious regime
  int arms = 0, horizon = 0, d_max = 0;
  std::string regime;
};

inline RegretCurve regret_curve(const RunTrace& trace, const StochasticEnv& env) {
  RegretCurve c;
  c.arms = trace.arms;
  c.horizon = trace.horizon;
  c.d_max = trace.constants.d_max;
  c.regime = "stochastic";
  double cum = 0.0, sigma_max = 0.0;
  std::vector<double> gaps(std::size_t(env.arms()));
  for (int i = 0; i < env.arms(); ++i) gaps[std::size_t(i)] = env.gap(i);
  std::vector<double> gaps_pos = gaps;
  for (double& g : gaps_pos)
    if (g <= 0.0) g = 1.0;  // best arm slot, ignored by the overlay
  for (const RoundRecord& r : trace.rounds) {
    double inc = env.regret_increment(r.arm);
    cum += inc;
    sigma_max = std::max(sigma_max, double(r.sigma));
    c.instantaneous.push_back(inc);
    c.cumulative.push_back(cum);
    c.overlay_adv.push_back(
        adversarial_overlay(r.t, trace.arms, r.cum_outstanding, c.d_max));
    c.overlay_stoch.push_back(stochastic_overlay(
        r.t, gaps_pos, env.best_arm(), sigma_max, c.d_max, trace.arms));
  }
  return c;
}

inline RegretCurve regret_curve(const RunTrace& trace, const ObliviousEnv& env) {
  RegretCurve c;
  c.arms = trace.arms;
  c.horizon = trace.horizon;
  c.d_max = trace.constants.d_max;
  c.regime = "oblivious";
  int best = env.best_arm(trace.horizon);
  double cum = 0.0;
  for (const RoundRecord& r : trace.rounds) {
    double inc = env.matrix()[std::size_t(r.t - 1)][std::size_t(r.arm)] -
                 env.matrix()[std::size_t(r.t - 1)][std::size_t(best)];
    cum += inc;
    c.instantaneous.push_back(inc);
    c.cumulative.push_back(cum);
    c.overlay_adv.push_back(
        adversarial_overlay(r.t, trace.arms, r.cum_outstanding, c.d_max));
  }
  return c;
}

}  // namespace delaybandit
