// Acceptance gate: runs the shipped verification criteria and prints one
// status line per criterion as it completes. Exits nonzero when any criterion
// fails. Optional arguments select a subset by id (for focused debugging).
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "manelab/acceptance.hpp"

int main(int argc, char** argv) {
  manelab::AcceptanceConfig cfg;
  if (const char* env = std::getenv("MANE_LAB_THREADS")) {
    int t = std::atoi(env);
    if (t >= 1) cfg.threads = t;
  }

  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    int id = std::atoi(argv[i]);
    if (id < 1 || id > 12) {
      std::fprintf(stderr, "usage: acceptance [criterion ids in 1..12]\n");
      return 2;
    }
    ids.push_back(id);
  }
  if (ids.empty())
    for (int id = 1; id <= 12; ++id) ids.push_back(id);

  int failed = 0;
  for (int id : ids) {
    manelab::CriterionResult r = manelab::run_criterion(id, cfg);
    std::printf("[%s] %2d %s: %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                r.detail.c_str());
    std::fflush(stdout);
    failed += r.pass ? 0 : 1;
  }
  if (failed == 0) {
    std::printf("acceptance: all %zu criteria passed\n", ids.size());
    return 0;
  }
  std::printf("acceptance: %d of %zu criteria failed\n", failed, ids.size());
  return 1;
}
