#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "mixrates/acceptance.hpp"

int main(int argc, char** argv) {
  namespace acc = mixrates::acceptance;
  CLI::App app{"Acceptance checks: one PASS/FAIL line per check"};
  bool quick = false;
  std::vector<int> ids;
  acc::Options opts;
  app.add_flag("--quick", quick, "Reduced replicates and sample sizes");
  app.add_flag("--full", "Reference sizes and thresholds (default)");
  app.add_option("--check", ids, "Run only these checks (1-9); repeatable")->check(CLI::Range(1, 9));
  app.add_option("--seed", opts.seed, "Master seed");
  app.add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  opts.tier = quick ? acc::Tier::Quick : acc::Tier::Full;
  if (ids.empty())
    for (const auto& e : acc::registry()) ids.push_back(e.id);

  bool all = true;
  for (int id : ids) {
    const auto r = acc::run_check(id, opts);
    std::cout << acc::summary_line(r) << std::endl;
    all = all && r.passed;
  }
  return all ? 0 : 1;
}
