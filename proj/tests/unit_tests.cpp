#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "delaybandit/analysis.hpp"
#include "delaybandit/checks.hpp"
#include "delaybandit/engine.hpp"
#include "delaybandit/environments.hpp"
#include "delaybandit/experiment.hpp"
#include "delaybandit/ftrl.hpp"
#include "delaybandit/io.hpp"
#include "delaybandit/lower_bound.hpp"
#include "delaybandit/schedules.hpp"

using namespace delaybandit;
using Catch::Approx;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out << body;
  return path.string();
}

}  // namespace

TEST_CASE("marginal derivative closed-form values") {
  CHECK(marginal_derivative(1.0, 1.0, 0.0) == Approx(-1.0));
  CHECK(marginal_derivative(0.25, 2.0, 0.0) == Approx(-4.0));
  CHECK(marginal_derivative(0.25, 2.0, 3.0) ==
        Approx(-4.0 + 3.0 * std::log(0.25)));
  CHECK(marginal_derivative(1.0, 0.0, 5.0) == Approx(0.0));
  CHECK_THROWS_AS(marginal_derivative(0.0, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(marginal_derivative(-0.5, 1.0, 1.0), std::domain_error);
}

TEST_CASE("marginal derivative is strictly increasing") {
  RegularizerWeights w = RegularizerWeights::symmetric(1, 3.0, 2.0);
  double prev = -std::numeric_limits<double>::infinity();
  for (double x = 1e-6; x < 4.0; x *= 1.7) {
    double v = marginal_derivative(x, w, 0);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("invert_marginal round-trips across the weight grid") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    double eta_inv = 0.1 + 50.0 * detail::uniform01(rng);
    double gamma = (i % 4 == 0) ? 0.0 : 30.0 * detail::uniform01(rng);
    RegularizerWeights w = RegularizerWeights::symmetric(1, eta_inv, gamma);
    double target = -200.0 + 190.0 * detail::uniform01(rng);
    if (gamma == 0.0 && target >= 0.0) target = -1.0;
    double x = invert_marginal(target, w, 0);
    CHECK(marginal_derivative(x, w, 0) ==
          Approx(target).margin(1e-9 * (1.0 + std::abs(target))));
  }
}

TEST_CASE("invert_marginal pure-branch closed forms") {
  // Tsallis only: f'(x) = -eta_inv / sqrt(x)
  RegularizerWeights tsallis = RegularizerWeights::symmetric(1, 2.0, 0.0);
  CHECK(invert_marginal(-4.0, tsallis, 0) == Approx(0.25));
  CHECK_THROWS_AS(invert_marginal(0.5, tsallis, 0), std::domain_error);
  // negentropy only: x = exp(target / gamma_inv)
  RegularizerWeights ent = RegularizerWeights::symmetric(1, 0.0, 2.0);
  CHECK(invert_marginal(2.0 * std::log(0.3), ent, 0) == Approx(0.3));
}

TEST_CASE("degenerate regularizer weights are rejected") {
  RegularizerWeights w;
  w.eta_inv = 0.0;
  w.gamma_inv = {1.0, 0.0};
  CHECK_THROWS_AS(solve_ftrl({0.0, 1.0}, w), std::invalid_argument);
  w.eta_inv = -1.0;
  w.gamma_inv = {1.0, 1.0};
  CHECK_THROWS_AS(solve_ftrl({0.0, 1.0}, w), std::invalid_argument);
}

TEST_CASE("objective value matches hand arithmetic") {
  RegularizerWeights w1 = RegularizerWeights::symmetric(1, 1.0, 1.0);
  CHECK(objective_value({1.0}, {0.0}, w1) == Approx(-3.0));
  // two arms, uniform, Tsallis only: -2 * 1 * 2 * sqrt(1/2) = -2 sqrt(2)
  RegularizerWeights w2 = RegularizerWeights::symmetric(2, 1.0, 0.0);
  CHECK(objective_value({0.5, 0.5}, {0.0, 0.0}, w2) ==
        Approx(-2.0 * std::sqrt(2.0)));
  CHECK_THROWS_AS(objective_value({0.0, 1.0}, {0.0, 0.0}, w2),
                  std::domain_error);
}

TEST_CASE("solve_ftrl equal losses give the uniform distribution") {
  for (std::size_t k : {2u, 5u, 17u}) {
    RegularizerWeights w = RegularizerWeights::symmetric(k, 4.0, 3.0);
    FtrlSolution sol = solve_ftrl(std::vector<double>(k, 7.0), w);
    for (double x : sol.x) CHECK(x == Approx(1.0 / double(k)).epsilon(1e-9));
  }
}

TEST_CASE("solve_ftrl agrees with the grid oracle on a fixed instance") {
  std::vector<double> L{0.0, 1.0, 2.0};
  RegularizerWeights w = RegularizerWeights::symmetric(3, 2.0, 1.5);
  FtrlSolution sol = solve_ftrl(L, w);
  double obj = detail::oracle_objective(sol.x, L, w.eta_inv, w.gamma_inv);
  double oracle = detail::grid_oracle_minimum(L, w.eta_inv, w.gamma_inv);
  CHECK(obj <= oracle + 1e-6);
  CHECK(detail::kkt_residual(sol, L, w) <= 1e-8);
  CHECK(detail::sum_gap(sol) <= 1e-10);
  CHECK(sol.x[0] > sol.x[1]);
  CHECK(sol.x[1] > sol.x[2]);
}

TEST_CASE("solve_ftrl is equivariant under permutations") {
  std::vector<double> L{0.3, 2.0, 0.7, 5.0};
  RegularizerWeights w = RegularizerWeights::symmetric(4, 3.0, 2.0);
  FtrlSolution a = solve_ftrl(L, w);
  std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<double> Lp(4);
  for (std::size_t i = 0; i < 4; ++i) Lp[i] = L[perm[i]];
  FtrlSolution b = solve_ftrl(Lp, w);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(b.x[i] == Approx(a.x[perm[i]]).epsilon(1e-8));
}

TEST_CASE("raising one loss lowers that arm's probability only") {
  std::vector<double> L{1.0, 1.0, 1.0};
  RegularizerWeights w = RegularizerWeights::symmetric(3, 2.0, 2.0);
  FtrlSolution before = solve_ftrl(L, w);
  L[1] += 3.0;
  FtrlSolution after = solve_ftrl(L, w);
  CHECK(after.x[1] < before.x[1]);
  CHECK(after.x[0] > before.x[0]);
  CHECK(after.x[2] > before.x[2]);
}

TEST_CASE("solve_ftrl single arm and input validation") {
  RegularizerWeights w1 = RegularizerWeights::symmetric(1, 1.0, 1.0);
  CHECK(solve_ftrl({3.0}, w1).x[0] == 1.0);
  RegularizerWeights w2 = RegularizerWeights::symmetric(2, 1.0, 1.0);
  CHECK_THROWS_AS(solve_ftrl({1.0}, w2), std::invalid_argument);
  CHECK_THROWS_AS(
      solve_ftrl({1.0, std::numeric_limits<double>::quiet_NaN()}, w2),
      std::invalid_argument);
}

TEST_CASE("solve_ftrl survives extreme loss spreads") {
  RegularizerWeights w = RegularizerWeights::symmetric(3, 1.0, 1.0);
  FtrlSolution sol = solve_ftrl({0.0, 500.0, 2000.0}, w);
  CHECK(detail::sum_gap(sol) <= 1e-10);
  CHECK(sol.x[0] > 0.99);
  for (double x : sol.x) CHECK(x > 0.0);
}

TEST_CASE("tuning constants match the closed form") {
  TuningConstants c = tuning_constants(2, 1);
  double l2 = std::log(2.0);
  double kc = std::cbrt(2.0);
  CHECK(c.eta0 == Approx(10.0 + 1.0 / ((kc * l2) * (kc * l2))));
  CHECK(c.gamma0 == Approx(576.0 * kc * kc * l2));
  TuningConstants big = tuning_constants(16, 8);
  double lk = std::log(16.0);
  CHECK(big.eta0 == Approx(80.0 + 64.0 / std::pow(std::cbrt(16.0) * lk, 2)));
  CHECK(big.gamma0 == Approx(576.0 * 64.0 * std::pow(16.0, 2.0 / 3.0) * lk));
  CHECK_THROWS_AS(tuning_constants(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(tuning_constants(4, -1), std::invalid_argument);
}

TEST_CASE("learning-rate schedules") {
  TuningConstants c = tuning_constants(4, 3);
  CHECK(eta_inv(1, c) == Approx(std::sqrt(1.0 + c.eta0)));
  CHECK(eta_inv(100, c) == Approx(std::sqrt(100.0 + c.eta0)));
  CHECK_THROWS_AS(eta_inv(0, c), std::invalid_argument);
  CHECK(gamma_inv(0.0, c) == Approx(std::sqrt(c.gamma0 / std::log(4.0))));
  CHECK(gamma_inv(50.0, c) ==
        Approx(std::sqrt((50.0 + c.gamma0) / std::log(4.0))));
  CHECK_THROWS_AS(gamma_inv(-1.0, c), std::invalid_argument);
}

TEST_CASE("asymmetric per-arm rates scale by sqrt(gap)") {
  TuningConstants c = tuning_constants(3, 2);
  std::vector<double> gaps{0.25, 1.0, 0.04};
  std::vector<double> g = asymmetric_gamma_inv(10.0, c, gaps);
  double base = gamma_inv(10.0, c);
  CHECK(g[0] == Approx(base * 0.5));
  CHECK(g[1] == Approx(base));
  CHECK(g[2] == Approx(base * 0.2));
  CHECK_THROWS_AS(asymmetric_gamma_inv(10.0, c, {0.5, 0.0, 0.1}),
                  std::invalid_argument);
}

TEST_CASE("outstanding count examples") {
  // single long delay: only round 1 stays outstanding
  std::vector<int> spike{12, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  for (int t = 2; t <= 12; ++t) CHECK(outstanding_count(t, spike) == 1);
  CHECK(outstanding_count(1, spike) == 0);
  CHECK(sigma_max_of(spike) == 1);
  // fixed delay d: sigma_t = min(t-1, d)
  std::vector<int> fixed(10, 3);
  for (int t = 1; t <= 10; ++t)
    CHECK(outstanding_count(t, fixed) == std::min(t - 1, 3));
}

TEST_CASE("sigma_max subset bound, exhaustive and greedy agree") {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 100; ++it) {
    std::vector<int> d(10);
    for (int& v : d) v = int(rng() % 6);
    SigmaMaxReport rep = sigma_max_bound_check(d);
    CHECK(rep.exhaustive);
    CHECK(rep.pass);
    CHECK(rep.subset_minimum == greedy_skip_minimum(d));
  }
}

TEST_CASE("stochastic environment validation and gaps") {
  CHECK_THROWS_AS(StochasticEnv({0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(StochasticEnv({-0.1, 0.5}), std::invalid_argument);
  StochasticEnv env({0.6, 0.2, 0.9});
  CHECK(env.best_arm() == 1);
  CHECK(env.gap(0) == Approx(0.4));
  CHECK(env.regret_increment(1) == 0.0);
  env.reset(3);
  std::vector<double> l = env.loss_at(1);
  for (double v : l) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("oblivious environment best arm and validation") {
  std::vector<std::vector<double>> m{{0.1, 0.9}, {0.9, 0.1}, {0.9, 0.1}};
  ObliviousEnv env(m);
  CHECK(env.arms() == 2);
  CHECK(env.best_arm(3) == 1);
  CHECK(env.best_arm(1) == 0);  // the best arm depends on the prefix
  CHECK_THROWS_AS(ObliviousEnv({{0.5, 1.5}}), std::invalid_argument);
  CHECK_THROWS_AS(ObliviousEnv({{0.5, 0.5}, {0.5}}), std::invalid_argument);
}

TEST_CASE("block-flip stress instance alternates the leading pair") {
  ObliviousEnv env = make_block_flip_env(3, 10, 5, 0.1);
  CHECK(env.matrix()[0][0] == Approx(0.4));
  CHECK(env.matrix()[0][1] == Approx(0.6));
  CHECK(env.matrix()[5][0] == Approx(0.6));
  CHECK(env.matrix()[5][1] == Approx(0.4));
  CHECK(env.matrix()[0][2] == Approx(0.75));
}

TEST_CASE("delay schedules") {
  DelaySchedule f = DelaySchedule::fixed(4);
  CHECK(f.delay_at(1) == 4);
  CHECK(f.declared_d_max() == 4);
  DelaySchedule e = DelaySchedule::explicit_list({3, 0, 2});
  CHECK(e.delay_at(2) == 0);
  CHECK(e.declared_d_max() == 3);
  CHECK_THROWS_AS(e.delay_at(4), std::out_of_range);
  DelaySchedule r = DelaySchedule::random_bounded(5);
  r.reset(9);
  for (int t = 1; t <= 100; ++t) {
    int d = r.delay_at(t);
    CHECK(d >= 0);
    CHECK(d <= 5);
  }
  CHECK_THROWS_AS(DelaySchedule::fixed(-1), std::invalid_argument);
}

TEST_CASE("importance-weighted estimate is loss over play probability") {
  std::vector<double> est = importance_weighted_estimate({0.2, 0.8}, 0, 0.5);
  CHECK(est[0] == Approx(2.5));
  CHECK(est[1] == 0.0);
}

TEST_CASE("inverse-CDF sampling hits the right frequencies") {
  std::mt19937_64 rng(17);
  std::vector<double> p{0.2, 0.5, 0.3};
  std::vector<int> counts(3, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[std::size_t(sample_arm(p, rng))];
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(double(counts[i]) / n == Approx(p[i]).margin(0.01));
}

TEST_CASE("engine hand trace, fixed delay 1 over 3 rounds") {
  StochasticEnv env({0.2, 0.7});
  DelaySchedule delays = DelaySchedule::fixed(1);
  Engine engine(env, delays, tuning_constants(2, 1));
  RunTrace trace = engine.run(3, 42);
  REQUIRE(trace.rounds.size() == 3);
  CHECK(trace.rounds[0].sigma == 0);
  CHECK(trace.rounds[1].sigma == 1);
  CHECK(trace.rounds[2].sigma == 1);
  CHECK(trace.rounds[0].arrivals == 0);
  CHECK(trace.rounds[1].arrivals == 1);
  CHECK(trace.rounds[2].arrivals == 2);  // round 3's own feedback truncates
  CHECK(trace.rounds[2].truncated);
  CHECK(trace.any_truncation);
  CHECK(trace.rounds[0].cum_outstanding == Approx(0.0));
  CHECK(trace.rounds[1].cum_outstanding == Approx(1.0));
  CHECK(trace.rounds[2].cum_outstanding == Approx(2.0));
}

TEST_CASE("engine sigma matches the standalone outstanding count") {
  StochasticEnv env({0.3, 0.6, 0.8});
  DelaySchedule delays = DelaySchedule::explicit_list({3, 2, 1, 0, 4, 0, 2, 1});
  Engine engine(env, delays, tuning_constants(3, 4));
  RunTrace trace = engine.run(8, 5);
  std::vector<int> d{3, 2, 1, 0, 4, 0, 2, 1};
  // truncated arrivals are delivered early, so cap delays at the horizon
  for (int t = 1; t <= 8; ++t) {
    std::vector<int> capped = d;
    for (int s = 1; s <= 8; ++s)
      capped[std::size_t(s - 1)] = std::min(d[std::size_t(s - 1)], 8 - s);
    CHECK(trace.rounds[std::size_t(t - 1)].sigma ==
          outstanding_count(t, capped));
  }
}

TEST_CASE("zero delay reduces to an immediate-feedback reference loop") {
  std::vector<std::vector<double>> m;
  std::mt19937_64 gen(33);
  for (int t = 0; t < 40; ++t) {
    std::vector<double> row(3);
    for (double& v : row) v = detail::uniform01(gen);
    m.push_back(row);
  }
  ObliviousEnv env(m);
  DelaySchedule delays = DelaySchedule::fixed(0);
  TuningConstants tc = tuning_constants(3, 0);
  Engine engine(env, delays, tc);
  RunTrace trace = engine.run(40, 7);

  // reference: same sampling stream, no queue, feedback folded immediately
  std::mt19937_64 rng(7);
  std::vector<double> cum(3, 0.0);
  double running_sigma_sum = 0.0;
  for (int t = 1; t <= 40; ++t) {
    RegularizerWeights w = RegularizerWeights::symmetric(
        3, eta_inv(t, tc), gamma_inv(running_sigma_sum, tc));
    FtrlSolution sol = solve_ftrl(cum, w);
    int arm = sample_arm(sol.x, rng);
    double loss = m[std::size_t(t - 1)][std::size_t(arm)];
    cum[std::size_t(arm)] += loss / sol.x[std::size_t(arm)];
    CHECK(trace.rounds[std::size_t(t - 1)].arm == arm);
    CHECK(trace.rounds[std::size_t(t - 1)].loss == Approx(loss));
    CHECK(trace.rounds[std::size_t(t - 1)].sigma == 0);
  }
}

TEST_CASE("engine records snapshots and validates inputs") {
  StochasticEnv env({0.2, 0.7});
  DelaySchedule delays = DelaySchedule::fixed(2);
  Engine engine(env, delays, tuning_constants(2, 2));
  RunFlags flags;
  flags.snapshots = true;
  RunTrace trace = engine.run(5, 1, flags);
  REQUIRE(trace.snapshots.size() == 5);
  for (const auto& x : trace.snapshots) {
    double s = 0.0;
    for (double v : x) s += v;
    CHECK(s == Approx(1.0).margin(1e-9));
  }
  CHECK_THROWS_AS(engine.run(0, 1), std::invalid_argument);
  Engine mismatched(env, delays, tuning_constants(3, 2));
  CHECK_THROWS_AS(mismatched.run(5, 1), std::invalid_argument);
}

TEST_CASE("arrivals identity holds with equality for a pile-up") {
  // delays (3,2,1,0): everything arrives at the end of round 4
  StochasticEnv env({0.2, 0.7});
  DelaySchedule delays = DelaySchedule::explicit_list({3, 2, 1, 0});
  Engine engine(env, delays, tuning_constants(2, 3));
  RunTrace trace = engine.run(4, 2);
  CHECK(trace.rounds[3].arrivals == 4);
  ArrivalsReport rep = arrivals_inequality_check(trace);
  CHECK(rep.pass);
  CHECK(rep.lhs_at_T == 6);
  CHECK(rep.rhs_at_T == 6);
}

TEST_CASE("drift check flags a fabricated doubling violation") {
  RunTrace trace;
  trace.rounds.resize(3);
  for (int t = 0; t < 3; ++t) trace.rounds[std::size_t(t)].t = t + 1;
  trace.snapshots = {{0.5, 0.5}, {0.6, 0.4}, {0.55, 0.45}};
  DriftReport ok = drift_check(trace, 2);
  CHECK(ok.pass);
  CHECK(ok.max_ratio == Approx(1.2));  // 0.6 / 0.5
  trace.snapshots[2] = {0.04, 0.96};
  trace.snapshots[0] = {0.98, 0.02};
  DriftReport bad = drift_check(trace, 2);
  CHECK_FALSE(bad.pass);
  CHECK(bad.max_ratio == Approx(0.96 / 0.02));
  CHECK(bad.witness_t == 3);
  CHECK(bad.witness_s == 1);
  trace.snapshots.clear();
  CHECK_THROWS_AS(drift_check(trace, 2), std::invalid_argument);
}

TEST_CASE("overlays are finite, positive and monotone in t") {
  double a1 = adversarial_overlay(100.0, 4, 50.0, 5);
  double a2 = adversarial_overlay(400.0, 4, 200.0, 5);
  CHECK(a1 > 0.0);
  CHECK(a2 > a1);
  double s1 = stochastic_overlay(100.0, {1.0, 0.2}, 0, 3.0, 5, 2);
  double s2 = stochastic_overlay(1000.0, {1.0, 0.2}, 0, 3.0, 5, 2);
  CHECK(s1 > 0.0);
  CHECK(s2 > s1);
  TuningConstants c = tuning_constants(2, 5);
  CHECK(paper_constants_overlay(100.0, {1.0, 0.2}, 0, 3.0, 2.0, c) > s1);
  CHECK_THROWS_AS(adversarial_overlay(-1.0, 4, 0.0, 0), std::invalid_argument);
}

TEST_CASE("oblivious regret curve on a tiny matrix") {
  std::vector<std::vector<double>> m{{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
  ObliviousEnv env(m);
  DelaySchedule delays = DelaySchedule::fixed(0);
  Engine engine(env, delays, tuning_constants(2, 0));
  RunTrace trace = engine.run(3, 1);
  RegretCurve curve = regret_curve(trace, env);
  REQUIRE(curve.cumulative.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    double expect = trace.rounds[t].arm == 1 ? 1.0 : 0.0;
    CHECK(curve.instantaneous[t] == Approx(expect));
  }
  CHECK(curve.overlay_stoch.empty());
}

TEST_CASE("loss range sequence validation and permutation") {
  LossRangeSequence seq;
  seq.ranges = {3.0, 2.0, 2.0, 1.0};
  seq.validate();
  CHECK(seq.range_at_round(2) == Approx(2.0));
  seq.rho = {4, 3, 2, 1};
  seq.validate();
  CHECK(seq.range_at_round(1) == Approx(1.0));
  CHECK(seq.range_at_round(4) == Approx(3.0));
  seq.rho = {1, 1, 2, 3};
  CHECK_THROWS_AS(seq.validate(), std::invalid_argument);
  seq.rho.clear();
  seq.ranges = {1.0, 2.0};
  CHECK_THROWS_AS(seq.validate(), std::invalid_argument);
}

TEST_CASE("regret floor arithmetic") {
  CHECK(floor_log2(2) == 1);
  CHECK(floor_log2(15) == 3);
  CHECK(floor_log2(16) == 4);
  LossRangeSequence seq = LossRangeSequence::unit(4096);
  double tail = std::sqrt(4093.0 * std::log(16.0)) / 32.0;
  CHECK(lower_bound_floor(seq, 16) == Approx(std::max(2.0, tail)));
  LossRangeSequence zero;
  zero.ranges.assign(8, 0.0);
  CHECK(lower_bound_floor(zero, 4) == 0.0);
}

TEST_CASE("loss direction on the documented points") {
  std::vector<double> a = adv_loss_direction({0.5, 0.3, 0.2});
  CHECK(a[0] == Approx(1.0));
  CHECK(a[1] == Approx(-1.0));
  CHECK(a[2] == Approx(-1.0));
  std::vector<double> b = adv_loss_direction({0.4, 0.3, 0.3});
  CHECK(b[0] == Approx(1.0));
  CHECK(b[1] == Approx(-2.0 / 3.0));
  CHECK(b[2] == Approx(-2.0 / 3.0));
  std::vector<double> c = adv_loss_direction({0.25, 0.25, 0.25, 0.25});
  CHECK(c[0] == Approx(1.0));
  CHECK(c[1] == Approx(1.0));
  CHECK(c[2] == Approx(-1.0));
  CHECK(c[3] == Approx(-1.0));
  CHECK_THROWS_AS(adv_loss_direction({0.8, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(adv_loss_direction({1.0}), std::invalid_argument);
}

TEST_CASE("exponential weights distribution") {
  std::vector<double> z = exp3_distribution({0.0, 0.0, 0.0}, 1.0);
  for (double v : z) CHECK(v == Approx(1.0 / 3.0));
  // shift invariance
  std::vector<double> p = exp3_distribution({1.0, 2.0, 4.0}, 0.5);
  std::vector<double> q = exp3_distribution({101.0, 102.0, 104.0}, 0.5);
  for (std::size_t i = 0; i < 3; ++i) CHECK(p[i] == Approx(q[i]));
  CHECK(p[0] > p[1]);
  CHECK(p[1] > p[2]);
  CHECK_THROWS_AS(exp3_distribution({0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("halving adversary structure") {
  LossRangeSequence seq = LossRangeSequence::unit(2);
  HalvingAdversary adv(seq, 3);
  adv.reset(4);
  std::vector<double> r1 = adv.step(1, {});
  int neg = 0, pos = 0;
  for (double v : r1) {
    if (v == Approx(-0.5)) ++neg;
    if (v == Approx(0.5)) ++pos;
  }
  CHECK(neg == 2);
  CHECK(pos == 2);
  std::vector<double> r2 = adv.step(2, {});
  neg = pos = 0;
  int zero = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (r2[i] == Approx(-0.5)) {
      ++neg;
      CHECK(r1[i] == Approx(-0.5));  // halving stays inside the negative half
    } else if (r2[i] == Approx(0.5)) {
      ++pos;
      CHECK(r1[i] == Approx(-0.5));
    } else {
      ++zero;
    }
  }
  CHECK(neg == 1);
  CHECK(pos == 1);
  CHECK(zero == 2);
}

TEST_CASE("halving game regret is exactly one per replication") {
  LossRangeSequence seq = LossRangeSequence::unit(2);
  for (std::uint64_t s = 1; s <= 20; ++s) {
    ExpWeightsActor actor(std::sqrt(std::log(4.0)));
    HalvingAdversary adv(seq, s);
    FullInfoReport rep = run_full_info_game(actor, adv, seq, 4);
    CHECK(rep.regret == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("adaptive adversary bounds and zero rounds") {
  LossRangeSequence seq = LossRangeSequence::unit(64);
  AdaptiveAdversary adv(seq);
  ExpWeightsActor actor(0.2);
  actor.reset(8);
  adv.reset(8);
  for (int t = 1; t <= 64; ++t) {
    std::vector<double> x = actor.act();
    std::vector<double> ell = adv.step(t, x);
    if (t <= floor_log2(8))
      for (double v : ell) CHECK(v == 0.0);
    for (double v : ell) {
      CHECK(v >= -0.5);
      CHECK(v <= 0.5);
    }
    actor.observe(ell);
  }
}

TEST_CASE("adaptive adversary rejects malformed actor output") {
  LossRangeSequence seq = LossRangeSequence::unit(8);
  AdaptiveAdversary adv(seq);
  adv.reset(4);
  CHECK_THROWS_AS(adv.step(4, {0.5, 0.5, 0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(adv.step(4, {-0.5, 0.5, 0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("zero ranges give zero regret against a zero floor") {
  LossRangeSequence zero;
  zero.ranges.assign(6, 0.0);
  AdaptiveAdversary adv(zero);
  UniformActor actor;
  FullInfoReport rep = run_full_info_game(actor, adv, zero, 4);
  CHECK(rep.regret == 0.0);
  CHECK(rep.floor_target == 0.0);
  CHECK(rep.meets_floor);
}

TEST_CASE("bucket decomposition on worked examples") {
  // fixed delay 2 over six rounds pairs up
  Bucketing fixed2 = bucket_decompose({2, 2, 2, 2, 2, 1});
  CHECK(fixed2.bounds == std::vector<int>{1, 3, 5, 7});
  // zero delays give singletons
  Bucketing zeros = bucket_decompose({0, 0, 0});
  CHECK(zeros.bounds == std::vector<int>{1, 2, 3, 4});
  Bucketing mixed = bucket_decompose({4, 4, 2, 2, 1, 1, 1, 0});
  CHECK(mixed.bounds == std::vector<int>{1, 5, 6, 7, 8, 9});
  CHECK(mixed.buckets() == 5);
  CHECK(mixed.size(1) == 4);
  CHECK_THROWS_AS(bucket_decompose({1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(bucket_decompose({5, 0}), std::invalid_argument);
  CHECK_THROWS_AS(bucket_decompose({}), std::invalid_argument);
}

TEST_CASE("bucketed reveal withholds feedback until the boundary") {
  // actor that counts observations as they arrive
  struct CountingActor final : FullInfoActor {
    int arms = 0;
    std::vector<int> seen_at_round;
    int seen = 0;
    void reset(int k) override { arms = k; }
    std::vector<double> act() override {
      seen_at_round.push_back(seen);
      return std::vector<double>(std::size_t(arms), 1.0 / arms);
    }
    void observe(const std::vector<double>&) override { ++seen; }
  };
  LossRangeSequence seq = LossRangeSequence::unit(6);
  Bucketing b = bucket_decompose({2, 2, 2, 2, 2, 1});
  CountingActor actor;
  ZeroAdversary adv;
  run_full_info_game(actor, adv, seq, 3, &b);
  CHECK(actor.seen_at_round == std::vector<int>{0, 0, 2, 2, 4, 4});
}

TEST_CASE("format_double round-trips doubles exactly") {
  for (double v : {1.0 / 3.0, 0.1, 123456.789, 1e-17, -2.5e300}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("key-value config parsing, overrides and errors") {
  std::string path = write_temp("db_cfg_test.cfg",
                                "# comment\nregime = stochastic\nK=3\n"
                                "T=50\nd_max=2\nmeans=0.2,0.5,0.7\nseeds=1,2\n");
  KeyValueConfig kv = KeyValueConfig::from_file(path);
  CHECK(kv.get("regime") == "stochastic");
  CHECK(kv.get_int("K") == 3);
  CHECK_THROWS_AS(kv.get("missing"), ConfigError);
  CHECK(kv.get_or("missing", "x") == "x");
  kv.set("K", "notanumber");
  CHECK_THROWS_AS(kv.get_int("K"), ConfigError);
  std::string bad = write_temp("db_cfg_bad.cfg", "justakey\n");
  CHECK_THROWS_AS(KeyValueConfig::from_file(bad), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::from_file("/nonexistent/cfg"), ConfigError);
}

TEST_CASE("environment variables override config keys") {
  KeyValueConfig kv;
  kv.set("regime", "stochastic");
  setenv("DELAYBANDIT_REGIME", "oblivious", 1);
  kv.apply_env_overrides();
  unsetenv("DELAYBANDIT_REGIME");
  CHECK(kv.get("regime") == "oblivious");
}

TEST_CASE("loss matrix file errors name the offending row") {
  std::string bad = write_temp("db_matrix_bad.csv", "0.1,0.2\n0.3,1.4\n");
  try {
    read_loss_matrix(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  std::string ragged = write_temp("db_matrix_ragged.csv", "0.1,0.2\n0.3\n");
  CHECK_THROWS_AS(read_loss_matrix(ragged), ConfigError);
  std::string good = write_temp("db_matrix_good.csv", "0.1,0.2\n0.3,0.4\n");
  auto m = read_loss_matrix(good);
  CHECK(m.size() == 2);
  CHECK(m[1][1] == Approx(0.4));
}

TEST_CASE("delay, range and gap file parsing") {
  std::string d = write_temp("db_delays.txt", "3\n0\n2\n");
  CHECK(read_delay_list(d) == std::vector<int>{3, 0, 2});
  std::string dbad = write_temp("db_delays_bad.txt", "3\n-1\n");
  CHECK_THROWS_AS(read_delay_list(dbad), ConfigError);
  std::string r = write_temp("db_ranges.txt", "2.0\n1.5\n1.5\n");
  CHECK(read_range_file(r) == std::vector<double>{2.0, 1.5, 1.5});
  std::string g = write_temp("db_gaps.txt", "0.25\n1.0\n");
  CHECK(read_gap_file(g) == std::vector<double>{0.25, 1.0});
  std::string gbad = write_temp("db_gaps_bad.txt", "0.25\n0\n");
  CHECK_THROWS_AS(read_gap_file(gbad), ConfigError);
}

TEST_CASE("run config validation") {
  KeyValueConfig kv;
  kv.set("regime", "stochastic");
  kv.set("K", "2");
  kv.set("T", "20");
  kv.set("d_max", "1");
  kv.set("means", "0.2,0.6");
  kv.set("seeds", "1,2,3");
  RunConfig c = RunConfig::from_config(kv);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(c.delay_spec == "fixed:1");
  kv.set("K", "1");
  CHECK_THROWS_AS(RunConfig::from_config(kv), ConfigError);
  kv.set("K", "2");
  kv.set("regime", "nonsense");
  CHECK_THROWS_AS(RunConfig::from_config(kv), ConfigError);
  kv.set("regime", "oblivious");
  CHECK_THROWS_AS(RunConfig::from_config(kv), ConfigError);  // no matrix
  kv.set("means", "0.2,0.6");
  kv.set("stress", "1");
  kv.set("regime", "oblivious");
  CHECK(RunConfig::from_config(kv).stress);
}

TEST_CASE("run_one_seed is reproducible and the CSV is stable") {
  RunConfig c;
  c.regime = "stochastic";
  c.arms = 2;
  c.horizon = 60;
  c.d_max = 3;
  c.delay_spec = "fixed:3";
  c.means = {0.3, 0.6};
  c.seeds = {9};
  SeedResult a = run_one_seed(c, 9);
  SeedResult b = run_one_seed(c, 9);
  REQUIRE(a.trace.rounds.size() == b.trace.rounds.size());
  for (std::size_t i = 0; i < a.trace.rounds.size(); ++i) {
    CHECK(a.trace.rounds[i].arm == b.trace.rounds[i].arm);
    CHECK(a.trace.rounds[i].loss == b.trace.rounds[i].loss);
  }
  auto dir = std::filesystem::temp_directory_path() / "db_seedcsv";
  std::filesystem::create_directories(dir);
  std::string p1 = (dir / "a.csv").string(), p2 = (dir / "b.csv").string();
  write_seed_csv(a, c, p1);
  write_seed_csv(b, c, p2);
  std::ifstream f1(p1), f2(p2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  CHECK(s1.str().rfind("# regime=stochastic", 0) == 0);
  CHECK(s1.str().find("t,arm,loss,sigma_t,D_t,eta_inv,gamma_inv,inst_regret,"
                      "cum_regret,overlay_adv,overlay_stoch") !=
        std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run_experiment writes one CSV per seed plus an aggregate") {
  RunConfig c;
  c.regime = "stochastic";
  c.arms = 2;
  c.horizon = 30;
  c.d_max = 0;
  c.delay_spec = "fixed:0";
  c.means = {0.3, 0.6};
  c.seeds = {1, 2};
  auto dir = std::filesystem::temp_directory_path() / "db_exp";
  std::filesystem::remove_all(dir);
  ExperimentSummary sum = run_experiment(c, dir.string(), 2);
  CHECK(sum.files.size() == 3);
  CHECK(std::filesystem::exists(dir / "seed_1.csv"));
  CHECK(std::filesystem::exists(dir / "seed_2.csv"));
  CHECK(std::filesystem::exists(dir / "aggregate.csv"));
  std::ifstream agg(dir / "aggregate.csv");
  std::string line;
  int rows = 0;
  while (std::getline(agg, line))
    if (!line.empty() && line[0] != '#') ++rows;
  CHECK(rows == 31);  // header + 30 rounds
  std::filesystem::remove_all(dir);
}

TEST_CASE("asymmetric rates leave the engine consistent") {
  StochasticEnv env({0.3, 0.55, 0.7});
  DelaySchedule delays = DelaySchedule::fixed(2);
  Engine engine(env, delays, tuning_constants(3, 2));
  RunFlags flags;
  flags.snapshots = true;
  flags.asymmetric_gaps = std::vector<double>{0.25, 0.25, 0.4};
  RunTrace trace = engine.run(50, 3, flags);
  for (const auto& x : trace.snapshots) {
    double s = 0.0;
    for (double v : x) s += v;
    CHECK(s == Approx(1.0).margin(1e-9));
  }
  flags.asymmetric_gaps = std::vector<double>{0.25, 0.25};
  CHECK_THROWS_AS(engine.run(50, 3, flags), std::invalid_argument);
}

TEST_CASE("lowerbound runner on a small adaptive game") {
  KeyValueConfig kv;
  kv.set("K", "4");
  kv.set("T", "64");
  kv.set("actor", "exp3");
  kv.set("adversary", "adaptive");
  kv.set("seed", "1");
  LowerBoundConfig c = LowerBoundConfig::from_config(kv);
  LowerBoundReport rep = run_lowerbound(c);
  CHECK(rep.floor_target == Approx(lower_bound_floor(LossRangeSequence::unit(64), 4)));
  CHECK(rep.last_losses.size() == 64);
  kv.set("adversary", "halving");
  kv.set("replications", "50");
  LowerBoundReport hrep = run_lowerbound(LowerBoundConfig::from_config(kv));
  CHECK(hrep.mean_regret == Approx(1.0).margin(1e-9));
}
