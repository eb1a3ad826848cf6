#pragma once

#include <map>
#include <string>

#include "manelab/geometry.hpp"

namespace manelab {

struct SystemSpec {
  SystemKind kind = SystemKind::flat;
  std::map<std::string, double> params;  // flat: "dim"; open_plane: "r_inner", "r_outer", "plateau"
};

SystemKind parse_system_kind(const std::string& name);
std::string system_kind_name(SystemKind k);

// Constructs one of the model systems with analytic L, dL/dv, dL/dx, H, the
// Hamiltonian vector field, declared first integrals, and reference constants.
LagrangianSystem build_system(const SystemSpec& spec);

// Closed-form (period, action of L + k) for the closed-orbit family at energy
// level k. Only heisenberg and psl2r carry such a family; k outside the valid
// range or an unsupported system is an InputError.
struct ReferenceOrbit {
  double period;
  double action;  // A_{L+k} over one period
};
ReferenceOrbit reference_orbit(const LagrangianSystem& sys, double k);

// Exact initial phase-space state of the closed orbit at energy k (same family
// as reference_orbit). Integrating ham_vector_field from here for one period
// returns to the start.
CotangentState reference_orbit_state(const LagrangianSystem& sys, double k);

// Initial state whose orbit has period exactly T within the closed-orbit
// family, together with its energy level k(T).
struct PeriodOrbit {
  CotangentState start;
  double k;
  double action;  // A_{L+k} over the period T
};
PeriodOrbit reference_orbit_with_period(const LagrangianSystem& sys, double T);

// Samples the straight vertical curve t -> (x, y, z - t) of the nilpotent
// model as a discrete path and reports its Euler-Lagrange residual and its
// action with the critical constant folded in (both vanish on this family).
struct VerticalCheck {
  double el_residual;
  double action;  // A_{L + 1/2}
};
VerticalCheck vertical_orbit_check(const LagrangianSystem& sys, const ChartPoint& x,
                                   double duration, int nodes = 1000);

// Left-invariant momentum frame of the half-space chart: returns
// (p_alpha, p_beta, p_gamma) at a phase point. p_gamma is conserved along the
// flow; p_alpha and p_beta are conserved exactly on the p_gamma = 1/2 orbits.
Vec psl2r_left_invariant_momenta(const CotangentState& s);

// Initial state on the special p_gamma = 1/2 orbit with prescribed constant
// (p_alpha, p_beta). Requires p_alpha^2 + p_beta^2 = 1/4 within 1e-10.
CotangentState psl2r_horocycle_state(double p_alpha, double p_beta);

// Radial potential of the open_plane system (exposed for tests).
double open_plane_potential(const LagrangianSystem& sys, double rho);

}  // namespace manelab
