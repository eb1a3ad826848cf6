#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace manelab {

struct LbfgsOptions {
  int memory = 12;
  int max_iters = 20000;
  double grad_tol = 1e-7;   // on max-abs gradient entry
  double armijo_c1 = 1e-4;
  int max_backtracks = 60;
  // Variable-metric hook: fills the diagonal initial inverse Hessian; called
  // every precond_refresh iterations with the current point.
  std::function<void(const std::vector<double>&, std::vector<double>&)> precond;
  int precond_refresh = 20;
  std::optional<double> early_stop;  // finish as soon as f < early_stop
};

struct LbfgsResult {
  std::vector<double> x;
  double f = 0;
  double grad_inf = 0;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;  // "grad_tol" | "early_stop" | "max_iters" | "line_search"
};

// Limited-memory quasi-Newton descent with Armijo backtracking. The objective
// returns f and fills grad; non-finite f is treated as +inf (outside the
// admissible region). The start point must be admissible.
LbfgsResult lbfgs_minimize(std::vector<double> x0,
                           const std::function<double(const std::vector<double>&, std::vector<double>&)>& fn,
                           const LbfgsOptions& opts);

}  // namespace manelab
