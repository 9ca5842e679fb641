// Acceptance gate: runs the twelve numbered batteries and prints one
// PASS/FAIL line per criterion. Exit 0 iff every hard criterion passes;
// soft criteria report WARN but never fail the gate.

#include <cstdlib>
#include <iostream>
#include <thread>

#include "delaybandit/checks.hpp"

int main(int argc, char** argv) {
  int jobs = argc > 1 ? std::atoi(argv[1])
                      : int(std::max(1u, std::thread::hardware_concurrency()));
  std::vector<delaybandit::CheckResult> results =
      delaybandit::run_all_checks(jobs);
  bool all_pass = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const delaybandit::CheckResult& r = results[i];
    all_pass = all_pass && r.pass;
    const char* status = r.pass ? (r.warned ? "PASS(warn)" : "PASS") : "FAIL";
    std::cout << status << " criterion-" << (i + 1) << " " << r.name << ": "
              << r.detail << std::endl;
  }
  std::cout << (all_pass ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL") << std::endl;
  return all_pass ? 0 : 1;
}
