#pragma once

#include "manelab/flow.hpp"
#include "manelab/geometry.hpp"
#include "manelab/variational.hpp"

namespace manelab {

struct MeasureAtom {
  TangentState state;
  double weight;
};

// Discrete holonomic measure: weighted atoms on the tangent bundle. Weights
// sum to 1; for samples of closed paths the associated rotation class is zero
// by construction (the carrier is a contractible loop of the cover).
struct HolonomicMeasureSample {
  std::vector<MeasureAtom> atoms;
  std::string source;
};

// Equal-weight atoms at the path's grid nodes with forward-difference
// velocities. Integrals of grid functions against the sample equal the path's
// discrete time average exactly.
HolonomicMeasureSample sample_from_path(const LagrangianSystem& sys, const DiscretePath& path);

// Trapezoid-weighted atoms along an integrated orbit segment (velocities from
// the Hamiltonian vector field via dH/dp).
HolonomicMeasureSample sample_from_segment(const LagrangianSystem& sys, const OrbitSegment& seg);

// Velocity rescaling by lambda; base points and weights are kept.
HolonomicMeasureSample rescale_measure(const HolonomicMeasureSample& m, double lambda);

double measure_integral_L(const LagrangianSystem& sys, const HolonomicMeasureSample& m);
double measure_integral_E(const LagrangianSystem& sys, const HolonomicMeasureSample& m);

// Stationarity of the action under velocity rescaling at lambda = 1: compares
// the centered finite difference of F(lambda) = integral of L against the
// closed form integral of (E + L).
struct StationarityCheck {
  double fd_derivative;
  double identity_value;
  double residual;  // |fd - identity|
};
StationarityCheck stationarity_residual(const LagrangianSystem& sys,
                                        const HolonomicMeasureSample& m, double fd_step = 1e-4);

// Integrates the distinguished p_gamma = 1/2 orbit from (p_alpha, p_beta) and
// samples it as a holonomic measure (half-space model only).
struct HorocycleResult {
  OrbitSegment orbit;
  HolonomicMeasureSample sample;
};
HorocycleResult horocycle_measure(const LagrangianSystem& sys, double p_alpha, double p_beta,
                                  double length, const IntegratorConfig& cfg = {});

// Witness that the union of two measure supports is not a velocity graph over
// the base: a pair of atoms with base distance <= tol whose velocity gap is
// maximal. Returns nothing when no pair of bases comes within tol.
struct GraphWitness {
  double base_dist;
  double velocity_gap;
  TangentState a, b;
};
std::optional<GraphWitness> graph_union_witness(const HolonomicMeasureSample& ma,
                                                const HolonomicMeasureSample& mb, double tol);

}  // namespace manelab
