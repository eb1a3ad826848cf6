#pragma once

#include "manelab/flow.hpp"
#include "manelab/variational.hpp"

namespace manelab {

struct BarrierRow {
  double T;
  double hT;       // finite-time potential h^T(x0, x1)
  double hT_plus;  // h^T + c T
  bool ok;         // false when the minimization failed for this duration
};

// Finite-time potentials along a duration grid, with the liminf proxy taken
// over the tail half of the grid and an asymptote a - b/T fitted there.
struct BarrierProfile {
  double c;
  std::vector<BarrierRow> rows;
  double liminf_proxy;  // min of hT_plus over the successful tail half
  double fit_a = 0, fit_b = 0;
  bool fit_ok = false;
};

BarrierProfile barrier_profile(const LagrangianSystem& sys, const ChartPoint& x0,
                               const ChartPoint& x1, double c, const std::vector<double>& T_grid,
                               const MinimizeConfig& cfg);

// Aubry membership indicator: the barrier proxy and whether it sits below the
// near-zero threshold (default: 3x a conservative grid-slack estimate 0.05).
struct AubryIndicator {
  double value;
  bool aubry;
};
AubryIndicator aubry_indicator(const BarrierProfile& profile, double eps_aubry = 0.05);

// Chain of Hamiltonian orbit segments with jumps between consecutive segment
// endpoints measured in phase-space chart distance. delta is the sum of the
// jump sizes; concatenation adds deltas plus the bridging jump.
struct PreOrbit {
  std::vector<OrbitSegment> segments;
  std::vector<double> jumps;
  double total_duration = 0;
  double delta = 0;
};

PreOrbit make_preorbit(std::vector<OrbitSegment> segments);
PreOrbit concat_preorbits(const PreOrbit& a, const PreOrbit& b);

// Sum of per-segment orbit actions of (L + k); jumps contribute nothing.
double preorbit_action(const LagrangianSystem& sys, const PreOrbit& y, double k);

// Energy-defect bound along the chain: sum over jumps of (local Lipschitz
// constant of H along the jump chord) * (jump size), plus the recorded
// integration drift of each segment. Returns both the bound and the actual
// worst deviation of segment energies from the first segment's start.
struct EnergyDefect {
  double actual;
  double bound;
};
EnergyDefect preorbit_energy_defect(const LagrangianSystem& sys, const PreOrbit& y);

// |A(Y on [0,T]) - A(Y on [0,t]) - A(Y on [t,T])| with t snapped to the
// nearest grid knot of the chain. Vanishes identically for the trapezoid
// action; kept as a regression guard on the splitting logic.
double shift_identity_residual(const LagrangianSystem& sys, const PreOrbit& y, double k, double t);

struct PhaseBarrierConfig {
  std::vector<double> durations;  // defaults to {8pi * 2^j, j = 0..3}
  double gap_cap = 0.15;          // admissibility cap on endpoint phase gaps
  double energy_tol = 0.05;       // precondition |H(X0) - H(X1)| tolerance
  MinimizeConfig minimize;
  IntegratorConfig integrator;
};

struct PhaseBarrierMember {
  double T;
  double action;  // A_{L+k} of the lifted orbit segment
  double gap_start, gap_end;
  bool admissible;
};

// Upper bound for the phase-space barrier at (X0, X1): builds one-segment
// pre-orbit candidates by lifting fixed-endpoint minimizers of each duration
// through the discrete initial covector and integrating the flow, then takes
// the best action among members whose endpoint gaps pass the cap. Returns
// +infinity when no member is admissible or the energies of X0, X1 disagree.
struct PhaseBarrierResult {
  double value;
  std::vector<PhaseBarrierMember> members;
};
PhaseBarrierResult phase_barrier_upper(const LagrangianSystem& sys, const CotangentState& X0,
                                       const CotangentState& X1, double k,
                                       const PhaseBarrierConfig& cfg);

// Lifts a discrete minimizer into phase space: integrates the flow from the
// path's discrete initial covector over the path's duration.
OrbitSegment lift_path_to_orbit(const LagrangianSystem& sys, const DiscretePath& path,
                                const IntegratorConfig& cfg);

}  // namespace manelab
