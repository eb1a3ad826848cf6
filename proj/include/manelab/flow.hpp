#pragma once

#include <map>

#include "manelab/geometry.hpp"
#include "manelab/variational.hpp"

namespace manelab {

enum class Scheme { rk4, implicit_midpoint };

struct IntegratorConfig {
  double step = 1e-3;
  Scheme scheme = Scheme::rk4;
  double max_energy_drift = 1e-6;
  // Record every record_stride-th step (the final state is always recorded).
  // Drift monitoring still sees every step.
  int record_stride = 1;
};

// A Hamiltonian orbit sampled on a uniform time grid, with conserved-quantity
// logs. drift_warning is set when energy or a declared first integral moved
// more than the configured bound (the data is still returned).
struct OrbitSegment {
  std::vector<double> times;
  std::vector<CotangentState> states;
  std::vector<double> energy_log;
  std::vector<std::pair<std::string, std::vector<double>>> integral_logs;
  double max_energy_drift = 0;
  double max_integral_drift = 0;
  bool drift_warning = false;

  const CotangentState& front() const { return states.front(); }
  const CotangentState& back() const { return states.back(); }
  double duration() const { return times.back() - times.front(); }
};

// Fixed-step integration of the Hamiltonian vector field. Negative duration
// integrates backward. Leaving the chart (or producing non-finite state) is a
// NumericalError.
OrbitSegment integrate(const LagrangianSystem& sys, const CotangentState& start, double duration,
                       const IntegratorConfig& cfg);

// Trapezoid value of p . dH/dp - H + k along the segment's grid. Additive
// under splitting the segment at any grid knot.
double orbit_action(const LagrangianSystem& sys, const OrbitSegment& seg, double k);

// Max over interior nodes of | d/dt dL/dv - dL/dx | with centered differences
// (both the velocity estimate and the time derivative). Closed paths wrap.
double el_residual(const LagrangianSystem& sys, const DiscretePath& path);

// Forward-then-backward integration gap in phase-space chart distance; a
// consistency probe for the integrator schemes.
double time_reversal_gap(const LagrangianSystem& sys, const CotangentState& start, double duration,
                         const IntegratorConfig& cfg);

// The orbit segment restricted to grid indices [i0, i1].
OrbitSegment slice_segment(const OrbitSegment& seg, int i0, int i1);

}  // namespace manelab
