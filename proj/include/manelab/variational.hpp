#pragma once

#include <cstdint>
#include <optional>

#include "manelab/geometry.hpp"

namespace manelab {

// Uniform-grid discrete path with m+1 nodes over [0, T]. Velocities are
// forward differences v_i = (x_{i+1} - x_i) * m / T. A closed path stores
// node m equal to node 0 exactly.
struct DiscretePath {
  double duration = 0;
  bool closed = false;
  std::vector<Vec> nodes;

  int segments() const { return static_cast<int>(nodes.size()) - 1; }
  double step() const { return duration / segments(); }
};

// Forward-difference velocity on segment i (0 <= i < m).
Vec node_velocity(const DiscretePath& path, int i);

// Discrete action of L + k: per segment (h/2)(L(x_i, v_i) + L(x_{i+1}, v_i)),
// summed, plus k*T. This quadrature is the single action convention used by
// every module.
double path_action(const LagrangianSystem& sys, const DiscretePath& path, double k);

// Gradient of the k-independent part of path_action with respect to node
// coordinates. Entries for nodes outside the free range are still filled; the
// caller masks endpoints as needed. For closed paths index m wraps to 0 and
// the gradient covers nodes 0..m-1.
std::vector<double> path_action_gradient(const LagrangianSystem& sys, const DiscretePath& path);

// Second-order-consistent discrete covector at the first node (used to lift a
// variational minimizer into phase space), and its final-node counterpart.
Vec initial_covector(const LagrangianSystem& sys, const DiscretePath& path);
Vec final_covector(const LagrangianSystem& sys, const DiscretePath& path);

// Time average of E(x_i, v_i) over the path's segments.
double path_mean_energy(const LagrangianSystem& sys, const DiscretePath& path);

struct MinimizeConfig {
  double nodes_per_unit_time = 20;
  int min_nodes = 64;
  int max_nodes = 2048;
  int starts = 8;
  double grad_tol = 1e-7;
  int max_iters = 20000;
  std::uint64_t seed = 0;
  int threads = 1;
  int lbfgs_memory = 12;
  // Optional certification shortcut: stop a start as soon as its action (at
  // k = 0) drops below this value.
  std::optional<double> early_stop;
};

struct MinimizeReport {
  double action = 0;       // discrete action at k = 0
  double energy_mean = 0;  // time-averaged energy of the winning path
  double grad_inf = 0;
  int iterations = 0;
  int start_index = 0;
  int nodes = 0;
  bool converged = false;
  std::string stop_reason;
};

struct MinimizeOutcome {
  DiscretePath path;
  MinimizeReport report;
};

// Multi-start quasi-Newton minimization of the discrete action over paths from
// x0 to x1 in time T. Start 0 is the straight chart segment; later starts add
// seeded smooth perturbations (and, when x0 == x1, seeded circles through x0).
MinimizeOutcome minimize_fixed_endpoints(const LagrangianSystem& sys, const ChartPoint& x0,
                                         const ChartPoint& x1, double T,
                                         const MinimizeConfig& cfg);

// Same, over closed loops of period T; starts are seeded circles of varying
// plane, center, and radius. Degenerate (point-collapsed) winners are valid
// outcomes and are reported like any other.
MinimizeOutcome minimize_closed_loop(const LagrangianSystem& sys, double T,
                                     const MinimizeConfig& cfg);

// Finite-time potential h^T(x0, x1): the minimal discrete action at k = 0.
double finite_time_potential(const LagrangianSystem& sys, const ChartPoint& x0,
                             const ChartPoint& x1, double T, const MinimizeConfig& cfg);

}  // namespace manelab
