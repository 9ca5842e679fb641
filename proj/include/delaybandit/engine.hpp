#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "delaybandit/environments.hpp"
#include "delaybandit/ftrl.hpp"
#include "delaybandit/schedules.hpp"

// The full game loop: per-round FTRL play, inverse-CDF sampling, the
// delayed-feedback queue, and importance-weighted loss accumulation.
//
// Feedback from round s arrives at the end of round s + d_s (truncated to
// T) and is folded into the cumulative estimate before round s + d_s + 1,
// never into the round it arrives in.

namespace delaybandit {

struct FeedbackEvent {
  int origin = 0;
  int arm = 0;
  double loss = 0.0;
  int arrival = 0;
  double estimate = 0.0;  // loss / x_{origin, arm}
};

struct RoundRecord {
  int t = 0;
  int arm = 0;
  double loss = 0.0;
  int sigma = 0;
  double cum_outstanding = 0.0;  // D_t
  double eta_inv = 0.0;
  double gamma_inv = 0.0;  // symmetric value; per-arm variants scale it
  int arrivals = 0;        // a_t
  bool truncated = false;
  bool delay_exceeded_dmax = false;
};

struct RunTrace {
  std::uint64_t seed = 0;
  int horizon = 0;
  int arms = 0;
  TuningConstants constants;
  std::vector<RoundRecord> rounds;
  // present iff snapshots were requested; rounds.size() x K
  std::vector<std::vector<double>> snapshots;
  // optional drifted pseudo-regret instrumentation, diagnostic only
  std::optional<double> drifted_regret;
  bool any_truncation = false;
  bool any_delay_violation = false;
};

struct RunFlags {
  bool snapshots = false;
  // per-arm negentropy rates; requires oracle gaps with a
  // positive surrogate in the best arm's slot.
  std::optional<std::vector<double>> asymmetric_gaps;
  // when set (and snapshots on) the trace records the drifted pseudo-regret
  std::optional<int> drift_best_arm;
};

// ell_hat = loss * 1[I=arm] / x[arm] as a full vector.
inline std::vector<double> importance_weighted_estimate(
    const std::vector<double>& x, int arm, double loss) {
  std::vector<double> est(x.size(), 0.0);
  est[std::size_t(arm)] = loss / x[std::size_t(arm)];
  return est;
}

// Inverse-CDF sample from a probability vector; the generator is a
// mt19937_64 consuming one draw per call, documented for reproducibility.
inline int sample_arm(const std::vector<double>& probs, std::mt19937_64& rng) {
  double u = detail::uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return int(i);
  }
  return int(probs.size()) - 1;
}

class Engine {
 public:
  Engine(LossEnvironment& env, DelaySchedule& delays, TuningConstants constants)
      : env_(env), delays_(delays), constants_(constants) {}

  RunTrace run(int horizon, std::uint64_t seed, const RunFlags& flags = {}) {
    const int k = env_.arms();
    const int T = horizon;
    if (T < 1) throw std::invalid_argument("run: horizon must be >= 1");
    if (k != constants_.arms)
      throw std::invalid_argument("run: tuning constants disagree with env");
    if (flags.asymmetric_gaps && int(flags.asymmetric_gaps->size()) != k)
      throw std::invalid_argument("run: gap vector length mismatch");

    // independent streams for the learner and the environment
    std::mt19937_64 rng(seed);
    env_.reset(seed ^ 0x9e3779b97f4a7c15ULL);
    delays_.reset(seed ^ 0xc2b2ae3d27d4eb4fULL);

    RunTrace trace;
    trace.seed = seed;
    trace.horizon = T;
    trace.arms = k;
    trace.constants = constants_;
    trace.rounds.reserve(std::size_t(T));

    std::vector<double> cum_loss(std::size_t(k), 0.0);  // L_hat_t^obs
    std::vector<std::vector<FeedbackEvent>> queue(std::size_t(T) + 1);
    int outstanding = 0;
    double cum_outstanding = 0.0;
    double drifted = 0.0;

    for (int t = 1; t <= T; ++t) {
      RoundRecord rec;
      rec.t = t;
      rec.sigma = outstanding;
      cum_outstanding += outstanding;
      rec.cum_outstanding = cum_outstanding;

      rec.eta_inv = eta_inv(t, constants_);
      rec.gamma_inv = gamma_inv(cum_outstanding, constants_);
      RegularizerWeights w;
      w.eta_inv = rec.eta_inv;
      if (flags.asymmetric_gaps)
        w.gamma_inv = asymmetric_gamma_inv(cum_outstanding, constants_,
                                           *flags.asymmetric_gaps);
      else
        w.gamma_inv.assign(std::size_t(k), rec.gamma_inv);

      FtrlSolution sol;
      try {
        sol = solve_ftrl(cum_loss, w);
      } catch (const std::exception& e) {
        throw std::runtime_error("round " + std::to_string(t) + ": " + e.what());
      }
      if (flags.snapshots) trace.snapshots.push_back(sol.x);

      int arm = sample_arm(sol.x, rng);
      std::vector<double> losses = env_.loss_at(t);
      double loss = losses[std::size_t(arm)];
      int d = delays_.delay_at(t);
      rec.arm = arm;
      rec.loss = loss;
      rec.delay_exceeded_dmax = d > constants_.d_max;
      int arrival = t + d;
      if (arrival > T) {
        arrival = T;
        rec.truncated = true;
      }
      FeedbackEvent ev{t, arm, loss, arrival, loss / sol.x[std::size_t(arm)]};
      queue[std::size_t(arrival)].push_back(ev);
      ++outstanding;

      // end of round t: consume everything arriving now
      for (const FeedbackEvent& e : queue[std::size_t(t)]) {
        cum_loss[std::size_t(e.arm)] += e.estimate;
        --outstanding;
        ++rec.arrivals;
        if (flags.drift_best_arm && flags.snapshots) {
          drifted += sol.x[std::size_t(e.arm)] * e.estimate;
          if (e.arm == *flags.drift_best_arm) drifted -= e.estimate;
        }
      }
      queue[std::size_t(t)].clear();

      trace.any_truncation = trace.any_truncation || rec.truncated;
      trace.any_delay_violation =
          trace.any_delay_violation || rec.delay_exceeded_dmax;
      trace.rounds.push_back(rec);
    }
    if (outstanding != 0)
      throw std::logic_error("run: feedback queue not empty after round T");
    if (flags.drift_best_arm && flags.snapshots) trace.drifted_regret = drifted;
    return trace;
  }

 private:
  LossEnvironment& env_;
  DelaySchedule& delays_;
  TuningConstants constants_;
};

}  // namespace delaybandit
