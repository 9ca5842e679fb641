#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "delaybandit/analysis.hpp"
#include "delaybandit/engine.hpp"
#include "delaybandit/environments.hpp"
#include "delaybandit/io.hpp"
#include "delaybandit/lower_bound.hpp"

// Batch experiment orchestration shared by the CLI and the test suites.
// Each seed is an independent run; a worker pool dispatches seeds and the
// owning worker writes that seed's CSV, so output is identical for any
// worker count.

namespace delaybandit {

struct RunConfig {
  std::string regime;  // stochastic | oblivious
  int arms = 0;
  int horizon = 0;
  int d_max = 0;
  std::string delay_spec;  // fixed:N | file:PATH | uniform
  std::vector<double> means;                  // stochastic
  std::string loss_matrix_path;               // oblivious
  bool stress = false;                        // oblivious stress generator
  int stress_block = 0;                       // 0 -> ceil(sqrt(T))
  std::vector<std::uint64_t> seeds;
  bool snapshots = false;
  std::string gap_file;  // non-empty enables asymmetric gamma
  bool paper_constants = false;

  static RunConfig from_config(const KeyValueConfig& kv) {
    RunConfig c;
    c.regime = kv.get("regime");
    if (c.regime != "stochastic" && c.regime != "oblivious")
      throw ConfigError("regime: expected stochastic or oblivious, got '" +
                        c.regime + "'");
    c.arms = int(kv.get_int("K"));
    c.horizon = int(kv.get_int("T"));
    c.d_max = int(kv.get_int("d_max"));
    if (c.arms < 2) throw ConfigError("K: must be >= 2");
    if (c.horizon < 1) throw ConfigError("T: must be >= 1");
    if (c.d_max < 0) throw ConfigError("d_max: must be >= 0");
    c.delay_spec = kv.get_or("delay", "fixed:" + std::to_string(c.d_max));
    if (c.regime == "stochastic") {
      for (double m : parse_number_list(kv.get("means"), "means"))
        c.means.push_back(m);
      if (int(c.means.size()) != c.arms)
        throw ConfigError("means: expected K=" + std::to_string(c.arms) +
                          " entries");
    } else if (kv.has("loss_matrix")) {
      c.loss_matrix_path = kv.get("loss_matrix");
    } else if (kv.get_or("stress", "0") == "1") {
      c.stress = true;
      c.stress_block = int(std::stol(kv.get_or("stress_block", "0")));
    } else {
      throw ConfigError("oblivious regime needs loss_matrix=PATH or stress=1");
    }
    for (double s : parse_number_list(kv.get("seeds"), "seeds")) {
      if (s < 0) throw ConfigError("seeds: must be non-negative");
      c.seeds.push_back(std::uint64_t(s));
    }
    c.snapshots = kv.get_or("snapshots", "0") == "1";
    c.gap_file = kv.get_or("asymmetric_gamma", "");
    c.paper_constants = kv.get_or("paper_constants", "0") == "1";
    return c;
  }

  std::string echo() const {
    std::ostringstream os;
    os << "# regime=" << regime << "\n# K=" << arms << "\n# T=" << horizon
       << "\n# d_max=" << d_max << "\n# delay=" << delay_spec << "\n";
    if (!means.empty()) {
      os << "# means=";
      for (std::size_t i = 0; i < means.size(); ++i)
        os << (i ? "," : "") << format_double(means[i]);
      os << "\n";
    }
    if (!loss_matrix_path.empty()) os << "# loss_matrix=" << loss_matrix_path << "\n";
    if (stress) os << "# stress=1\n# stress_block=" << stress_block << "\n";
    os << "# snapshots=" << (snapshots ? 1 : 0) << "\n";
    if (!gap_file.empty()) os << "# asymmetric_gamma=" << gap_file << "\n";
    return os.str();
  }
};

inline DelaySchedule make_delay_schedule(const RunConfig& c) {
  const std::string& s = c.delay_spec;
  if (s.rfind("fixed:", 0) == 0) {
    int d = int(std::stol(s.substr(6)));
    if (d > c.d_max)
      throw ConfigError("delay: fixed delay exceeds declared d_max");
    return DelaySchedule::fixed(d);
  }
  if (s.rfind("file:", 0) == 0) {
    auto list = read_delay_list(s.substr(5));
    if (int(list.size()) < c.horizon)
      throw ConfigError("delay file shorter than horizon");
    return DelaySchedule::explicit_list(std::move(list));
  }
  if (s == "uniform") return DelaySchedule::random_bounded(c.d_max);
  throw ConfigError("delay: expected fixed:N, file:PATH or uniform, got '" + s +
                    "'");
}

struct SeedResult {
  std::uint64_t seed = 0;
  RunTrace trace;
  RegretCurve curve;
};

inline SeedResult run_one_seed(const RunConfig& c, std::uint64_t seed) {
  TuningConstants tc = tuning_constants(c.arms, c.d_max);
  DelaySchedule delays = make_delay_schedule(c);
  RunFlags flags;
  flags.snapshots = c.snapshots;
  if (!c.gap_file.empty()) {
    auto gaps = read_gap_file(c.gap_file);
    if (int(gaps.size()) != c.arms)
      throw ConfigError("gap file: expected K entries");
    flags.asymmetric_gaps = gaps;
  }

  SeedResult r;
  r.seed = seed;
  if (c.regime == "stochastic") {
    StochasticEnv env(c.means);
    Engine engine(env, delays, tc);
    r.trace = engine.run(c.horizon, seed, flags);
    r.curve = regret_curve(r.trace, env);
  } else {
    ObliviousEnv env =
        c.stress
            ? make_block_flip_env(
                  c.arms, c.horizon,
                  c.stress_block > 0
                      ? c.stress_block
                      : std::max(1, int(std::ceil(std::sqrt(double(c.horizon))))))
            : ObliviousEnv(read_loss_matrix(c.loss_matrix_path));
    if (env.arms() != c.arms) throw ConfigError("loss matrix: column count != K");
    if (env.horizon() < c.horizon)
      throw ConfigError("loss matrix: fewer rows than horizon");
    Engine engine(env, delays, tc);
    r.trace = engine.run(c.horizon, seed, flags);
    r.curve = regret_curve(r.trace, env);
  }
  return r;
}

inline void write_seed_csv(const SeedResult& r, const RunConfig& c,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << c.echo() << "# seed=" << r.seed << "\n";
  out << "t,arm,loss,sigma_t,D_t,eta_inv,gamma_inv,inst_regret,cum_regret,"
         "overlay_adv";
  bool stoch = !r.curve.overlay_stoch.empty();
  if (stoch) out << ",overlay_stoch";
  out << "\n";
  for (std::size_t i = 0; i < r.trace.rounds.size(); ++i) {
    const RoundRecord& rec = r.trace.rounds[i];
    out << rec.t << ',' << rec.arm << ',' << format_double(rec.loss) << ','
        << rec.sigma << ',' << format_double(rec.cum_outstanding) << ','
        << format_double(rec.eta_inv) << ',' << format_double(rec.gamma_inv)
        << ',' << format_double(r.curve.instantaneous[i]) << ','
        << format_double(r.curve.cumulative[i]) << ','
        << format_double(r.curve.overlay_adv[i]);
    if (stoch) out << ',' << format_double(r.curve.overlay_stoch[i]);
    out << "\n";
  }
}

struct ExperimentSummary {
  std::vector<std::string> files;
  std::vector<double> final_regret;  // per seed
  double mean_final_regret = 0.0;
};

// Runs every seed (jobs in parallel) and writes seed_<N>.csv per seed plus
// aggregate.csv with per-round mean/min/max of the cumulative regret.
inline ExperimentSummary run_experiment(const RunConfig& c,
                                        const std::string& out_dir,
                                        int jobs = 1) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::size_t n = c.seeds.size();
  std::vector<SeedResult> results(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        results[i] = run_one_seed(c, c.seeds[i]);
        std::string path = out_dir + "/seed_" + std::to_string(c.seeds[i]) +
                           ".csv";
        write_seed_csv(results[i], c, path);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  int nthreads = std::max(1, std::min(jobs, int(n)));
  std::vector<std::thread> pool;
  for (int j = 0; j < nthreads; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (std::size_t i = 0; i < n; ++i)
    if (!errors[i].empty())
      throw std::runtime_error("seed " + std::to_string(c.seeds[i]) + ": " +
                               errors[i]);

  ExperimentSummary sum;
  std::ofstream agg(out_dir + "/aggregate.csv", std::ios::binary);
  agg << c.echo() << "t,mean_cum_regret,min_cum_regret,max_cum_regret\n";
  for (int t = 0; t < c.horizon; ++t) {
    double mean = 0.0, lo = std::numeric_limits<double>::infinity(),
           hi = -std::numeric_limits<double>::infinity();
    for (const SeedResult& r : results) {
      double v = r.curve.cumulative[std::size_t(t)];
      mean += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    mean /= double(n);
    agg << (t + 1) << ',' << format_double(mean) << ',' << format_double(lo)
        << ',' << format_double(hi) << "\n";
  }
  for (const SeedResult& r : results) {
    sum.files.push_back(out_dir + "/seed_" + std::to_string(r.seed) + ".csv");
    sum.final_regret.push_back(r.curve.cumulative.back());
    sum.mean_final_regret += r.curve.cumulative.back();
  }
  sum.mean_final_regret /= double(n);
  sum.files.push_back(out_dir + "/aggregate.csv");
  return sum;
}

struct LowerBoundConfig {
  int arms = 0;
  int horizon = 0;
  std::string actor;      // exp3 | uniform
  std::string adversary;  // adaptive | halving | zero
  LossRangeSequence ranges;
  int replications = 1;       // halving Monte Carlo
  std::uint64_t seed = 1;

  static LowerBoundConfig from_config(const KeyValueConfig& kv) {
    LowerBoundConfig c;
    c.arms = int(kv.get_int("K"));
    c.horizon = int(kv.get_int("T"));
    if (c.arms < 2) throw ConfigError("K: must be >= 2");
    if (c.horizon < 1) throw ConfigError("T: must be >= 1");
    c.actor = kv.get_or("actor", "exp3");
    c.adversary = kv.get_or("adversary", "adaptive");
    if (kv.has("ranges")) {
      c.ranges.ranges = read_range_file(kv.get("ranges"));
      if (int(c.ranges.ranges.size()) != c.horizon)
        throw ConfigError("range file length != T");
    } else {
      c.ranges = LossRangeSequence::unit(c.horizon);
    }
    if (kv.has("permutation"))
      c.ranges.rho = read_permutation_file(kv.get("permutation"));
    c.ranges.validate();
    c.replications = int(std::stol(kv.get_or("replications", "1")));
    c.seed = std::uint64_t(kv.get_int("seed") ? kv.get_int("seed") : 1);
    return c;
  }
};

struct LowerBoundReport {
  double mean_regret = 0.0;
  double floor_target = 0.0;
  bool pass = false;
  std::vector<std::vector<double>> last_losses;
};

inline std::unique_ptr<FullInfoActor> make_actor(const LowerBoundConfig& c) {
  if (c.actor == "uniform") return std::make_unique<UniformActor>();
  if (c.actor == "exp3") {
    int m = floor_log2(c.arms);
    double sq = 0.0;
    for (int j = std::max(m, 1); j <= c.horizon; ++j)
      sq += c.ranges.ranges[std::size_t(j - 1)] * c.ranges.ranges[std::size_t(j - 1)];
    double eta = sq > 0.0 ? std::sqrt(std::log(double(c.arms)) / sq) : 1.0;
    return std::make_unique<ExpWeightsActor>(eta);
  }
  throw ConfigError("actor: expected exp3 or uniform, got '" + c.actor + "'");
}

inline LowerBoundReport run_lowerbound(const LowerBoundConfig& c) {
  LowerBoundReport rep;
  rep.floor_target = lower_bound_floor(c.ranges, c.arms);
  double total = 0.0;
  int reps = c.adversary == "halving" ? std::max(1, c.replications) : 1;
  for (int r = 0; r < reps; ++r) {
    auto actor = make_actor(c);
    std::unique_ptr<FullInfoAdversary> adv;
    if (c.adversary == "halving")
      adv = std::make_unique<HalvingAdversary>(c.ranges,
                                               c.seed + std::uint64_t(r));
    else if (c.adversary == "adaptive")
      adv = std::make_unique<AdaptiveAdversary>(c.ranges);
    else if (c.adversary == "zero")
      adv = std::make_unique<ZeroAdversary>();
    else
      throw ConfigError("adversary: expected adaptive, halving or zero");
    FullInfoReport g = run_full_info_game(*actor, *adv, c.ranges, c.arms);
    total += g.regret;
    if (r == reps - 1) rep.last_losses = g.losses;
  }
  rep.mean_regret = total / double(reps);
  rep.pass = rep.mean_regret >= rep.floor_target - 1e-9;
  return rep;
}

}  // namespace delaybandit
