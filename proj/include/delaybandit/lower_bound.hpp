#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "delaybandit/environments.hpp"

// Full-information lower-bound machinery: the zero-mean high-variance
// loss-direction routine, the adaptive adversary built on exponential
// weights, the halving construction, the greedy bucket decomposition,
// and a game runner that reports realized regret against the target
// floor max{ (1/2) sum_{j<=log2 K} L_j,
//            (1/32) sqrt(sum_{j>=log2 K} L_j^2 log K) }.

namespace delaybandit {

// Loss ranges sorted largest-first (L_1 >= L_2 >= ... >= L_T) plus a
// permutation rho assigning range L_{rho(t)} to round t.
struct LossRangeSequence {
  std::vector<double> ranges;  // index j-1 holds L_j
  std::vector<int> rho;        // rho[t-1] in [1..T]; identity if empty

  int horizon() const { return int(ranges.size()); }

  int range_index(int t) const {
    return rho.empty() ? t : rho.at(std::size_t(t - 1));
  }

  double range_at_round(int t) const {
    return ranges.at(std::size_t(range_index(t) - 1));
  }

  void validate() const {
    for (std::size_t j = 1; j < ranges.size(); ++j)
      if (ranges[j] > ranges[j - 1])
        throw std::invalid_argument("ranges must be sorted non-increasingly");
    for (double r : ranges)
      if (!(r >= 0.0))
        throw std::invalid_argument("ranges must be non-negative");
    if (!rho.empty()) {
      if (rho.size() != ranges.size())
        throw std::invalid_argument("permutation length mismatch");
      std::vector<bool> seen(rho.size(), false);
      for (int v : rho) {
        if (v < 1 || std::size_t(v) > rho.size() || seen[std::size_t(v - 1)])
          throw std::invalid_argument("rho is not a bijection on [T]");
        seen[std::size_t(v - 1)] = true;
      }
    }
  }

  static LossRangeSequence unit(int horizon) {
    LossRangeSequence s;
    s.ranges.assign(std::size_t(horizon), 1.0);
    return s;
  }
};

inline int floor_log2(int k) {
  int r = 0;
  while ((1 << (r + 1)) <= k) ++r;
  return r;
}

// Regret floor from the variable-range full-information bound.
inline double lower_bound_floor(const LossRangeSequence& seq, int arms) {
  int m = floor_log2(arms);
  int T = seq.horizon();
  double halving = 0.0;
  for (int j = 1; j <= std::min(m, T); ++j)
    halving += seq.ranges[std::size_t(j - 1)];
  halving *= 0.5;
  double sq = 0.0;
  for (int j = std::max(m, 1); j <= T; ++j)
    sq += seq.ranges[std::size_t(j - 1)] * seq.ranges[std::size_t(j - 1)];
  double tail = std::sqrt(sq * std::log(double(arms))) / 32.0;
  return std::max(halving, tail);
}

// Grows the set I from the argmax by repeatedly absorbing the smallest
// remaining coordinate while sum_I x + min_complement x <= 2/3, then
// returns +/- losses balancing <x, ell> to zero. Ties break to the
// lowest index. Requires max_i x_i <= 2/3.
inline std::vector<double> adv_loss_direction(const std::vector<double>& x) {
  const std::size_t k = x.size();
  if (k < 2) throw std::invalid_argument("adv_loss_direction: need K >= 2");
  std::size_t top = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (x[i] > x[top]) top = i;
  if (x[top] > 2.0 / 3.0)
    throw std::invalid_argument("adv_loss_direction: max_i x_i > 2/3");

  std::vector<bool> in_set(k, false);
  in_set[top] = true;
  double p = x[top];
  for (;;) {
    std::size_t lo = k;
    for (std::size_t i = 0; i < k; ++i)
      if (!in_set[i] && (lo == k || x[i] < x[lo])) lo = i;
    if (lo == k || p + x[lo] > 2.0 / 3.0) break;
    in_set[lo] = true;
    p += x[lo];
  }

  double q = 1.0 - p;
  double pos = std::min(1.0, q / p);
  double neg = std::max(-1.0, -p / q);
  std::vector<double> ell(k);
  for (std::size_t i = 0; i < k; ++i) ell[i] = in_set[i] ? pos : neg;
  return ell;
}

// Exponential-weights distribution z_i proportional to exp(-eta L_i),
// computed with a max shift.
inline std::vector<double> exp3_distribution(const std::vector<double>& L,
                                             double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("exp3_distribution: eta <= 0");
  double m = *std::min_element(L.begin(), L.end());
  std::vector<double> z(L.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < L.size(); ++i) {
    z[i] = std::exp(-eta * (L[i] - m));
    sum += z[i];
  }
  for (double& v : z) v /= sum;
  return z;
}

// Deterministic distribution-valued policy over full-information history.
class FullInfoActor {
 public:
  virtual ~FullInfoActor() = default;
  virtual void reset(int arms) = 0;
  virtual std::vector<double> act() = 0;
  virtual void observe(const std::vector<double>& loss) = 0;
};

class UniformActor final : public FullInfoActor {
 public:
  void reset(int arms) override { arms_ = arms; }
  std::vector<double> act() override {
    return std::vector<double>(std::size_t(arms_), 1.0 / double(arms_));
  }
  void observe(const std::vector<double>&) override {}

 private:
  int arms_ = 0;
};

class ExpWeightsActor final : public FullInfoActor {
 public:
  explicit ExpWeightsActor(double eta) : eta_(eta) {}
  void reset(int arms) override { cum_.assign(std::size_t(arms), 0.0); }
  std::vector<double> act() override { return exp3_distribution(cum_, eta_); }
  void observe(const std::vector<double>& loss) override {
    for (std::size_t i = 0; i < cum_.size(); ++i) cum_[i] += loss[i];
  }

 private:
  double eta_;
  std::vector<double> cum_;
};

class FullInfoAdversary {
 public:
  virtual ~FullInfoAdversary() = default;
  virtual void reset(int arms) = 0;
  // x_t is the actor's distribution for round t (exact, actor deterministic)
  virtual std::vector<double> step(int t, const std::vector<double>& x_t) = 0;
};

class ZeroAdversary final : public FullInfoAdversary {
 public:
  void reset(int arms) override { arms_ = arms; }
  std::vector<double> step(int, const std::vector<double>&) override {
    return std::vector<double>(std::size_t(arms_), 0.0);
  }

 private:
  int arms_ = 0;
};

// Halving construction: on rounds carrying the floor(log2 K) largest
// ranges, assigns -L/2 to a random half of the active set, +L/2 to the
// other half (one arm left at 0 if odd), then keeps the negative half.
// The best arm's cumulative loss ends at -sum L_j / 2 while any player's
// expected per-round loss is 0.
class HalvingAdversary final : public FullInfoAdversary {
 public:
  HalvingAdversary(LossRangeSequence seq, std::uint64_t seed)
      : seq_(std::move(seq)), rng_(seed) {
    seq_.validate();
  }

  void reset(int arms) override {
    arms_ = arms;
    active_.resize(std::size_t(arms));
    std::iota(active_.begin(), active_.end(), 0);
    halvings_done_ = 0;
  }

  std::vector<double> step(int t, const std::vector<double>&) override {
    std::vector<double> ell(std::size_t(arms_), 0.0);
    int m = floor_log2(arms_);
    if (seq_.range_index(t) > m || halvings_done_ >= m) return ell;
    double range = seq_.range_at_round(t);
    std::shuffle(active_.begin(), active_.end(), rng_);
    std::size_t half = active_.size() / 2;
    std::vector<int> next;
    for (std::size_t i = 0; i < half; ++i) {
      ell[std::size_t(active_[i])] = -range / 2.0;
      next.push_back(active_[i]);
    }
    for (std::size_t i = half; i < 2 * half; ++i)
      ell[std::size_t(active_[i])] = range / 2.0;
    // odd leftover arm stays at 0 and leaves the active set
    active_ = std::move(next);
    ++halvings_done_;
    return ell;
  }

 private:
  LossRangeSequence seq_;
  std::mt19937_64 rng_;
  int arms_ = 0;
  int halvings_done_ = 0;
  std::vector<int> active_;
};

// The adaptive adversary: plays zero on rounds whose range is among the
// floor(log2 K) largest or when its exponential-weights trajectory is too
// concentrated; otherwise emits sign(<x_t, ell>) L ell / 2 with ell from
// adv_loss_direction on the trajectory. sign(0) is +1.
class AdaptiveAdversary final : public FullInfoAdversary {
 public:
  explicit AdaptiveAdversary(LossRangeSequence seq) : seq_(std::move(seq)) {
    seq_.validate();
  }

  void reset(int arms) override {
    arms_ = arms;
    cum_.assign(std::size_t(arms), 0.0);
    int m = floor_log2(arms_);
    double sq = 0.0;
    for (int j = std::max(m, 1); j <= seq_.horizon(); ++j)
      sq += seq_.ranges[std::size_t(j - 1)] * seq_.ranges[std::size_t(j - 1)];
    // all-zero tail ranges degenerate to the zero adversary; eta is moot
    eta_ = sq > 0.0 ? std::sqrt(std::log(double(arms_)) / sq) : 1.0;
  }

  std::vector<double> step(int t, const std::vector<double>& x_t) override {
    validate_distribution(x_t);
    std::vector<double> zero(std::size_t(arms_), 0.0);
    std::vector<double> z = exp3_distribution(cum_, eta_);
    double zmax = *std::max_element(z.begin(), z.end());
    int m = floor_log2(arms_);
    if (zmax > 2.0 / 3.0 || seq_.range_index(t) <= m) return zero;
    std::vector<double> dir = adv_loss_direction(z);
    double ip = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i) ip += x_t[i] * dir[i];
    double sign = ip >= 0.0 ? 1.0 : -1.0;
    double range = seq_.range_at_round(t);
    std::vector<double> ell(std::size_t(arms_), 0.0);
    for (std::size_t i = 0; i < ell.size(); ++i)
      ell[i] = sign * range * dir[i] / 2.0;
    for (std::size_t i = 0; i < ell.size(); ++i) cum_[i] += ell[i];
    return ell;
  }

  double eta() const { return eta_; }

 private:
  static void validate_distribution(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) {
      if (!(v >= 0.0)) throw std::invalid_argument("actor emitted negative prob");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument("actor distribution does not sum to 1");
  }

  LossRangeSequence seq_;
  int arms_ = 0;
  double eta_ = 0.0;
  std::vector<double> cum_;
};

// Greedy partition into buckets B_m = {b_m, ..., b_{m+1}-1} such that all
// actions in a bucket precede the first feedback from inside it. Requires
// non-increasing delays with d_t <= T+1-t.
struct Bucketing {
  std::vector<int> bounds;  // b_1 .. b_{M+1}, b_1 = 1, b_{M+1} = T+1

  int buckets() const { return int(bounds.size()) - 1; }
  int size(int m) const {
    return bounds[std::size_t(m)] - bounds[std::size_t(m - 1)];
  }
};

inline Bucketing bucket_decompose(const std::vector<int>& delays) {
  const int T = int(delays.size());
  if (T == 0) throw std::invalid_argument("bucket_decompose: empty delays");
  for (int t = 1; t <= T; ++t) {
    if (t > 1 && delays[std::size_t(t - 1)] > delays[std::size_t(t - 2)])
      throw std::invalid_argument("bucket_decompose: delays must be non-increasing");
    if (delays[std::size_t(t - 1)] > T + 1 - t || delays[std::size_t(t - 1)] < 0)
      throw std::invalid_argument("bucket_decompose: delay out of range");
  }
  Bucketing b;
  b.bounds.push_back(1);
  int start = 1;
  while (start <= T) {
    int min_arrival = start + delays[std::size_t(start - 1)];
    int t = start + 1;
    while (t <= T && t < min_arrival) {
      min_arrival = std::min(min_arrival, t + delays[std::size_t(t - 1)]);
      ++t;
    }
    b.bounds.push_back(t);
    start = t;
  }
  return b;
}

struct FullInfoReport {
  double player_loss = 0.0;
  double best_arm_loss = 0.0;
  double regret = 0.0;
  double floor_target = 0.0;
  bool meets_floor = false;
  std::vector<std::vector<double>> losses;  // emitted trace
};

// Plays T rounds of the full-information game. When a bucketing is given,
// an entire bucket's losses are revealed to the actor only at the bucket
// boundary; otherwise feedback is immediate.
inline FullInfoReport run_full_info_game(FullInfoActor& actor,
                                         FullInfoAdversary& adversary,
                                         const LossRangeSequence& seq, int arms,
                                         const Bucketing* bucketing = nullptr) {
  const int T = seq.horizon();
  actor.reset(arms);
  adversary.reset(arms);

  FullInfoReport rep;
  rep.losses.reserve(std::size_t(T));
  std::vector<double> cum(std::size_t(arms), 0.0);
  std::vector<std::vector<double>> pending;
  std::size_t next_bucket = 1;

  for (int t = 1; t <= T; ++t) {
    if (bucketing) {
      // reveal completed buckets
      while (next_bucket < bucketing->bounds.size() &&
             bucketing->bounds[next_bucket] == t) {
        for (const auto& l : pending) actor.observe(l);
        pending.clear();
        ++next_bucket;
      }
    }
    std::vector<double> x = actor.act();
    std::vector<double> ell = adversary.step(t, x);
    for (std::size_t i = 0; i < ell.size(); ++i) {
      rep.player_loss += x[i] * ell[i];
      cum[i] += ell[i];
    }
    rep.losses.push_back(ell);
    if (bucketing)
      pending.push_back(ell);
    else
      actor.observe(ell);
  }
  rep.best_arm_loss = *std::min_element(cum.begin(), cum.end());
  rep.regret = rep.player_loss - rep.best_arm_loss;
  rep.floor_target = lower_bound_floor(seq, arms);
  rep.meets_floor = rep.regret >= rep.floor_target - 1e-9;
  return rep;
}

}  // namespace delaybandit
