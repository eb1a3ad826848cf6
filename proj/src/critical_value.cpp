#include "manelab/critical_value.hpp"

#include <algorithm>
#include <cmath>

#include "manelab/flow.hpp"
#include "manelab/rng.hpp"
#include "manelab/systems.hpp"

namespace manelab {

std::vector<double> default_cu_T_grid() {
  std::vector<double> g;
  for (int j = 0; j <= 7; ++j) g.push_back(2 * M_PI * std::pow(2.0, j));
  return g;
}

namespace {

int sweep_nodes(double T, const CuConfig& cfg) {
  double want = cfg.nodes_per_unit_time * T;
  return static_cast<int>(std::lround(std::clamp(
      want, static_cast<double>(cfg.min_nodes), static_cast<double>(cfg.max_nodes))));
}

// Discretization slack per grid duration: twice the observed discrete-action
// error of the exact closed orbit with that period, sampled at the sweep
// resolution. Systems without an orbit family use the floor.
std::vector<double> calibrate_epsilon(const LagrangianSystem& sys, const std::vector<double>& grid,
                                      const CuConfig& cfg) {
  const double floor_eps = 1e-4;
  std::vector<double> eps(grid.size(), floor_eps);
  if (!sys.has_closed_orbit_states) return eps;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    double T = grid[gi];
    if (T <= 2 * M_PI * 1.001) continue;
    PeriodOrbit po = reference_orbit_with_period(sys, T);
    int m = sweep_nodes(T, cfg);
    // integrate one period with grid-aligned recording
    long sub = std::max<long>(1, std::lround(std::ceil(T / (0.004 * m))));
    IntegratorConfig ic;
    ic.step = T / static_cast<double>(m * sub);
    ic.record_stride = static_cast<int>(sub);
    ic.max_energy_drift = 1e100;  // calibration only; drift checked in tests
    OrbitSegment seg = integrate(sys, po.start, T, ic);
    DiscretePath path;
    path.duration = T;
    path.closed = true;
    path.nodes.reserve(seg.states.size());
    for (const auto& st : seg.states) path.nodes.push_back(st.base.coords);
    path.nodes.back() = path.nodes.front();  // closed up to integrator error
    double err = std::abs(path_action(sys, path, po.k) - po.action);
    eps[gi] = std::max(floor_eps, 2 * err);
  }
  return eps;
}

}  // namespace

CriticalValueEstimate estimate_cu(const LagrangianSystem& sys, double k_lo, double k_hi,
                                  const CuConfig& cfg) {
  if (!(k_lo < k_hi)) throw InputError("estimate_cu: need k_lo < k_hi");
  if (!(cfg.tol > 0)) throw InputError("estimate_cu: tol must be positive");
  std::vector<double> grid = cfg.T_grid.empty() ? default_cu_T_grid() : cfg.T_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty() || grid.front() <= 0) throw InputError("estimate_cu: bad T grid");
  if (sys.reference && !(k_lo < sys.reference->cu && sys.reference->cu < k_hi))
    throw InputError(sys.name + ": bracket does not straddle the reference critical value");

  std::vector<double> eps = calibrate_epsilon(sys, grid, cfg);
  if (cfg.epsilon) std::fill(eps.begin(), eps.end(), *cfg.epsilon);
  double eps_max = *std::max_element(eps.begin(), eps.end());

  CriticalValueEstimate est;
  est.lower = k_lo;
  est.upper = k_hi;
  est.conclusive_lower = false;
  est.epsilon = eps_max;

  auto certify = [&](double k, int level) -> bool {
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      double T = grid[gi];
      MinimizeConfig mc;
      mc.nodes_per_unit_time = cfg.nodes_per_unit_time;
      mc.min_nodes = cfg.min_nodes;
      mc.max_nodes = cfg.max_nodes;
      mc.starts = cfg.starts;
      mc.max_iters = cfg.max_iters;
      mc.grad_tol = cfg.grad_tol;
      mc.threads = cfg.threads;
      mc.seed = Rng(cfg.seed, {0xce11ULL, static_cast<std::uint64_t>(level),
                               static_cast<std::uint64_t>(gi)})
                    .next_u64();
      mc.early_stop = -k * T - 3 * eps[gi];
      MinimizeOutcome out = minimize_closed_loop(sys, T, mc);
      double action_k = out.report.action + k * T;
      bool cert = action_k < -eps[gi];
      est.sweeps.push_back({k, T, action_k, out.report.energy_mean, cert});
      if (cert) {
        est.witnesses.push_back({k, action_k, std::move(out.path)});
        return true;
      }
    }
    return false;
  };

  int level = 0;
  while (est.upper - est.lower > cfg.tol && level < 60) {
    double k = 0.5 * (est.lower + est.upper);
    if (certify(k, level)) {
      est.lower = k;
      est.conclusive_lower = true;
    } else {
      est.upper = k;
    }
    ++level;
  }
  return est;
}

double measure_energy_gap(const LagrangianSystem& sys, const HolonomicMeasureSample& m, double c) {
  return std::abs(measure_integral_E(sys, m) - c);
}

}  // namespace manelab
