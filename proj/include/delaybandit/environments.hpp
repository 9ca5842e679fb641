#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

// Loss and delay generation: stochastic Bernoulli arms, oblivious loss
// matrices, and delay schedules. Random environments carry their own
// seeded generator, independent of the learner's.

namespace delaybandit {

namespace detail {

// [0,1) double from the top 53 bits; fixed across platforms.
inline double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

class LossEnvironment {
 public:
  virtual ~LossEnvironment() = default;
  virtual int arms() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  virtual std::vector<double> loss_at(int t) = 0;
};

// Bernoulli arms with a unique best (minimum-mean) arm.
class StochasticEnv final : public LossEnvironment {
 public:
  explicit StochasticEnv(std::vector<double> means) : means_(std::move(means)) {
    if (means_.empty())
      throw std::invalid_argument("StochasticEnv: no arms");
    int best = 0;
    for (std::size_t i = 0; i < means_.size(); ++i) {
      if (means_[i] < 0.0 || means_[i] > 1.0)
        throw std::invalid_argument("StochasticEnv: means must be in [0,1]");
      if (means_[i] < means_[std::size_t(best)]) best = int(i);
    }
    for (std::size_t i = 0; i < means_.size(); ++i)
      if (int(i) != best && means_[i] == means_[std::size_t(best)])
        throw std::invalid_argument("StochasticEnv: best arm must be unique");
    best_ = best;
  }

  int arms() const override { return int(means_.size()); }
  void reset(std::uint64_t seed) override { rng_.seed(seed); }

  std::vector<double> loss_at(int /*t*/) override {
    std::vector<double> l(means_.size());
    for (std::size_t i = 0; i < means_.size(); ++i)
      l[i] = detail::uniform01(rng_) < means_[i] ? 1.0 : 0.0;
    return l;
  }

  int best_arm() const { return best_; }
  const std::vector<double>& means() const { return means_; }

  double gap(int arm) const {
    return means_[std::size_t(arm)] - means_[std::size_t(best_)];
  }

  // Delta_{I_t}; zero when the best arm is played.
  double regret_increment(int played_arm) const { return gap(played_arm); }

 private:
  std::vector<double> means_;
  int best_ = 0;
  std::mt19937_64 rng_{0};
};

// Fixed T x K loss matrix, chosen before play.
class ObliviousEnv final : public LossEnvironment {
 public:
  explicit ObliviousEnv(std::vector<std::vector<double>> matrix)
      : matrix_(std::move(matrix)) {
    if (matrix_.empty() || matrix_[0].empty())
      throw std::invalid_argument("ObliviousEnv: empty loss matrix");
    for (std::size_t t = 0; t < matrix_.size(); ++t) {
      if (matrix_[t].size() != matrix_[0].size())
        throw std::invalid_argument("ObliviousEnv: ragged loss matrix at row " +
                                    std::to_string(t + 1));
      for (double v : matrix_[t])
        if (!(v >= 0.0 && v <= 1.0))
          throw std::invalid_argument(
              "ObliviousEnv: loss outside [0,1] at row " + std::to_string(t + 1));
    }
  }

  int arms() const override { return int(matrix_[0].size()); }
  int horizon() const { return int(matrix_.size()); }
  void reset(std::uint64_t /*seed*/) override {}

  std::vector<double> loss_at(int t) override {
    if (t < 1 || t > horizon())
      throw std::out_of_range("ObliviousEnv: round out of range");
    return matrix_[std::size_t(t - 1)];
  }

  // argmin of column sums over the first T rows (ties to lowest index).
  int best_arm(int horizon_rounds) const {
    std::vector<double> sums(matrix_[0].size(), 0.0);
    for (int t = 0; t < horizon_rounds; ++t)
      for (std::size_t i = 0; i < sums.size(); ++i)
        sums[i] += matrix_[std::size_t(t)][i];
    return int(std::min_element(sums.begin(), sums.end()) - sums.begin());
  }

  const std::vector<std::vector<double>>& matrix() const { return matrix_; }

 private:
  std::vector<std::vector<double>> matrix_;
};

// Heuristic adversarial stress instance: two near-tied arms whose loss
// gap flips sign on long blocks; remaining arms are plainly bad. Not a
// construction from any analysis, just a hard deterministic input.
inline ObliviousEnv make_block_flip_env(int arms, int horizon, int block_len,
                                        double half_gap = 0.05) {
  if (arms < 2 || horizon < 1 || block_len < 1)
    throw std::invalid_argument("make_block_flip_env: bad dimensions");
  std::vector<std::vector<double>> m(std::size_t(horizon),
                                     std::vector<double>(std::size_t(arms), 0.75));
  for (int t = 0; t < horizon; ++t) {
    int block = t / block_len;
    double lo = 0.5 - half_gap, hi = 0.5 + half_gap;
    m[std::size_t(t)][0] = (block % 2 == 0) ? lo : hi;
    m[std::size_t(t)][1] = (block % 2 == 0) ? hi : lo;
  }
  return ObliviousEnv(std::move(m));
}

enum class DelayKind { Fixed, Explicit, RandomBounded };

// One of: fixed d, an explicit list d_1..d_T, or i.i.d. uniform on
// [0, d_max].
class DelaySchedule {
 public:
  static DelaySchedule fixed(int d) {
    if (d < 0) throw std::invalid_argument("DelaySchedule: negative delay");
    DelaySchedule s;
    s.kind_ = DelayKind::Fixed;
    s.fixed_ = d;
    return s;
  }

  static DelaySchedule explicit_list(std::vector<int> delays) {
    for (int d : delays)
      if (d < 0) throw std::invalid_argument("DelaySchedule: negative delay");
    DelaySchedule s;
    s.kind_ = DelayKind::Explicit;
    s.list_ = std::move(delays);
    return s;
  }

  static DelaySchedule random_bounded(int d_max) {
    if (d_max < 0) throw std::invalid_argument("DelaySchedule: negative d_max");
    DelaySchedule s;
    s.kind_ = DelayKind::RandomBounded;
    s.d_max_ = d_max;
    return s;
  }

  DelayKind kind() const { return kind_; }

  void reset(std::uint64_t seed) { rng_.seed(seed); }

  int delay_at(int t) {
    switch (kind_) {
      case DelayKind::Fixed:
        return fixed_;
      case DelayKind::Explicit:
        if (t < 1 || std::size_t(t) > list_.size())
          throw std::out_of_range("DelaySchedule: round outside explicit list");
        return list_[std::size_t(t - 1)];
      case DelayKind::RandomBounded:
        return int(rng_() % std::uint64_t(d_max_ + 1));
    }
    return 0;
  }

  // Declared bound used for tuning; explicit lists report their realized max.
  int declared_d_max() const {
    switch (kind_) {
      case DelayKind::Fixed:
        return fixed_;
      case DelayKind::Explicit: {
        int m = 0;
        for (int d : list_) m = std::max(m, d);
        return m;
      }
      case DelayKind::RandomBounded:
        return d_max_;
    }
    return 0;
  }

  const std::vector<int>& list() const { return list_; }

 private:
  DelayKind kind_ = DelayKind::Fixed;
  int fixed_ = 0;
  int d_max_ = 0;
  std::vector<int> list_;
  std::mt19937_64 rng_{0};
};

}  // namespace delaybandit
