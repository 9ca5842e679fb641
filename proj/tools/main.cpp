// delaybandit command-line driver.
//
// Subcommands:
//   run        batch bandit experiments, one CSV per seed plus an aggregate
//   lowerbound full-information adversary games against the regret floor
//   check      acceptance batteries, machine-readable pass/fail CSV
//
// Exit codes: 0 success, 1 validation error, 2 runtime/solver error,
// 3 check-suite failure.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "delaybandit/checks.hpp"
#include "delaybandit/experiment.hpp"
#include "delaybandit/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitCheckFailure = 3;

delaybandit::KeyValueConfig load_config(const std::string& path,
                                        const std::vector<long>& seeds,
                                        const std::string& out_dir,
                                        bool snapshots, bool paper_constants,
                                        const std::string& gap_file) {
  delaybandit::KeyValueConfig kv =
      path.empty() ? delaybandit::KeyValueConfig{}
                   : delaybandit::KeyValueConfig::from_file(path);
  if (!seeds.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < seeds.size(); ++i)
      joined += (i ? "," : "") + std::to_string(seeds[i]);
    kv.set("seeds", joined);
  }
  if (!out_dir.empty()) kv.set("out", out_dir);
  if (snapshots) kv.set("snapshots", "1");
  if (paper_constants) kv.set("paper_constants", "1");
  if (!gap_file.empty()) kv.set("asymmetric_gamma", gap_file);
  kv.apply_env_overrides();
  return kv;
}

int cmd_run(const delaybandit::KeyValueConfig& kv, int jobs) {
  delaybandit::RunConfig c = delaybandit::RunConfig::from_config(kv);
  std::string out_dir = kv.get_or("out", "out");
  delaybandit::ExperimentSummary sum =
      delaybandit::run_experiment(c, out_dir, jobs);
  std::cout << c.echo();
  for (std::size_t i = 0; i < c.seeds.size(); ++i)
    std::cout << "seed " << c.seeds[i] << ": final regret "
              << delaybandit::format_double(sum.final_regret[i]) << "\n";
  std::cout << "mean final regret "
            << delaybandit::format_double(sum.mean_final_regret) << "\n";
  for (const std::string& f : sum.files) std::cout << "wrote " << f << "\n";
  return kExitOk;
}

int cmd_lowerbound(const delaybandit::KeyValueConfig& kv) {
  delaybandit::LowerBoundConfig c =
      delaybandit::LowerBoundConfig::from_config(kv);
  delaybandit::LowerBoundReport rep = delaybandit::run_lowerbound(c);
  std::cout << "# K=" << c.arms << "\n# T=" << c.horizon
            << "\n# actor=" << c.actor << "\n# adversary=" << c.adversary
            << "\n";
  std::string out_path = kv.get_or("out", "");
  if (!out_path.empty()) {
    std::filesystem::create_directories(out_path);
    std::ofstream out(out_path + "/lowerbound_trace.csv", std::ios::binary);
    out << "# K=" << c.arms << "\n# T=" << c.horizon << "\n# actor=" << c.actor
        << "\n# adversary=" << c.adversary << "\nt";
    for (int i = 1; i <= c.arms; ++i) out << ",loss_" << i;
    out << "\n";
    for (std::size_t t = 0; t < rep.last_losses.size(); ++t) {
      out << (t + 1);
      for (double v : rep.last_losses[t])
        out << ',' << delaybandit::format_double(v);
      out << "\n";
    }
    std::cout << "wrote " << out_path << "/lowerbound_trace.csv\n";
  }
  std::cout << "mean regret " << delaybandit::format_double(rep.mean_regret)
            << "\nfloor " << delaybandit::format_double(rep.floor_target)
            << "\nresult " << (rep.pass ? "PASS" : "FAIL") << "\n";
  return rep.pass ? kExitOk : kExitCheckFailure;
}

int cmd_check(const std::string& suite, int jobs, const std::string& out_csv) {
  using delaybandit::CheckResult;
  std::vector<CheckResult> results;
  if (suite == "solver") {
    results.push_back(delaybandit::check_solver_oracle());
    results.push_back(delaybandit::check_solver_scale());
  } else if (suite == "drift") {
    results.push_back(delaybandit::check_drift(jobs, nullptr));
  } else if (suite == "sigma-max") {
    results.push_back(delaybandit::check_sigma_max());
  } else if (suite == "arrivals") {
    delaybandit::ArrivalsAccumulator arrivals;
    delaybandit::check_drift(jobs, &arrivals);
    delaybandit::check_stochastic_shape(jobs, &arrivals);
    results.push_back({"arrivals-identity", arrivals.pass, false,
                       std::to_string(arrivals.traces) + " traces checked"});
  } else if (suite == "adversary") {
    results.push_back(delaybandit::check_loss_direction());
    results.push_back(delaybandit::check_lower_bound_adversaries());
  } else if (suite == "buckets") {
    results.push_back(delaybandit::check_bucketing());
  } else if (suite == "all") {
    results = delaybandit::run_all_checks(jobs);
  } else {
    std::cerr << "unknown check suite: " << suite
              << " (expected solver, drift, sigma-max, arrivals, adversary, "
                 "buckets or all)\n";
    return kExitValidation;
  }

  std::ostringstream csv;
  csv << "# suite=" << suite << "\ncheck,status,detail\n";
  bool all_pass = true;
  for (const CheckResult& r : results) {
    all_pass = all_pass && r.pass;
    std::string status = r.pass ? (r.warned ? "WARN" : "PASS") : "FAIL";
    std::string detail = r.detail;
    for (char& ch : detail)
      if (ch == ',') ch = ';';
    csv << r.name << ',' << status << ',' << detail << "\n";
    std::cout << status << ' ' << r.name << ": " << r.detail << "\n";
  }
  if (!out_csv.empty()) {
    std::ofstream out(out_csv, std::ios::binary);
    out << csv.str();
    std::cout << "wrote " << out_csv << "\n";
  }
  return all_pass ? kExitOk : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delayed-feedback bandit simulation laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir, gap_file, suite = "all", check_csv;
  std::vector<long> seeds;
  bool snapshots = false, paper_constants = false;
  int jobs = int(std::max(1u, std::thread::hardware_concurrency()));

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value config file");
    sub->add_option("--seed", seeds, "seed (repeatable, overrides config)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--jobs", jobs, "worker threads");
    sub->add_flag("--snapshots", snapshots, "record play distributions");
    sub->add_flag("--paper-constants", paper_constants,
                  "emit the literal-constant overlay");
    sub->add_option("--asymmetric-gamma", gap_file,
                    "gap file enabling per-arm negentropy rates");
  };

  CLI::App* run = app.add_subcommand("run", "batch bandit experiments");
  add_common(run);
  CLI::App* lb =
      app.add_subcommand("lowerbound", "full-information adversary games");
  add_common(lb);
  CLI::App* check = app.add_subcommand("check", "acceptance batteries");
  check->add_option("suite", suite,
                    "solver | drift | sigma-max | arrivals | adversary | "
                    "buckets | all");
  check->add_option("--jobs", jobs, "worker threads");
  check->add_option("--out", check_csv, "pass/fail CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (config_path.empty()) {
        std::cerr << "run: --config is required\n";
        return kExitValidation;
      }
      return cmd_run(load_config(config_path, seeds, out_dir, snapshots,
                                 paper_constants, gap_file),
                     jobs);
    }
    if (lb->parsed()) {
      if (config_path.empty()) {
        std::cerr << "lowerbound: --config is required\n";
        return kExitValidation;
      }
      return cmd_lowerbound(load_config(config_path, seeds, out_dir, snapshots,
                                        paper_constants, gap_file));
    }
    return cmd_check(suite, jobs, check_csv);
  } catch (const delaybandit::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
