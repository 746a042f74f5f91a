// Acceptance driver: one PASS/FAIL line per criterion, failing checks listed
// beneath. `acceptance --criterion N` runs a single criterion.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "coulomb/verify.hpp"

using namespace coulomb;

namespace {

struct Criterion {
  const char* title;
  void (*suite)(verify::Report&, const verify::SuiteOptions&);
};

void concentration(verify::Report& report, const verify::SuiteOptions& options) {
  verify::concentration_suite(report, options);
}

const std::map<int, Criterion>& criteria() {
  static const std::map<int, Criterion> table{
      {1, {"heat-kernel suite", verify::spectral_suite}},
      {2, {"Green-function suite", verify::green_suite}},
      {3, {"regularization suite", verify::regularize_suite}},
      {4, {"transport suite", verify::transport_suite}},
      {5, {"sampler suite", verify::sampler_suite}},
      {6, {"partition-function check", verify::partition_suite}},
      {7, {"equilibrium and potential path", verify::equilibrium_suite}},
      {8, {"concentration non-falsification", concentration}},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-8"};
  int only = 0;
  unsigned jobs = 0;
  app.add_option("--criterion", only, "Run one criterion")->check(CLI::Range(1, 8));
  app.add_option("--jobs", jobs, "Worker threads (0 = hardware concurrency)");
  CLI11_PARSE(app, argc, argv);

  verify::SuiteOptions options;
  options.jobs = jobs;
  bool all_ok = true;
  for (const auto& [number, c] : criteria()) {
    if (only && number != only) continue;
    verify::Report report;
    const auto start = std::chrono::steady_clock::now();
    c.suite(report, options);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool ok = verify::all_passed(report);
    all_ok = all_ok && ok;
    std::size_t failed = 0;
    for (const auto& r : report) failed += !r.passed;
    std::printf("criterion %d: %s  %s (%zu checks, %zu failed, %.1fs)\n", number, ok ? "PASS" : "FAIL", c.title,
                report.size(), failed, seconds);
    for (const auto& r : report)
      if (!r.passed) std::printf("    failed: %s / %s: %s\n", r.suite.c_str(), r.name.c_str(), r.detail.c_str());
    std::fflush(stdout);
  }
  return all_ok ? 0 : 1;
}
