#pragma once

#include <variant>

#include "manelab/barrier.hpp"
#include "manelab/critical_value.hpp"
#include "manelab/flow.hpp"
#include "manelab/geometry.hpp"

namespace manelab {

// Momentum shift by the differential of a function on the base:
// (x, p) -> (x, p + df(x)). The tautological-form defect has primitive f o pi.
struct FiberTranslation {
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> df;
  // Rows of the Hessian of f; needed to push the vector field forward.
  std::function<std::vector<Vec>(const Vec&)> hessf;
};

// Cotangent lift of the affine chart map phi(x) = A x + b:
// (x, p) -> (phi(x), A^{-T} p). Preserves the tautological form exactly.
struct AffineLift {
  std::vector<Vec> A;  // rows
  Vec b;
  std::vector<Vec> A_inv;  // rows of the inverse
};

using SymplectomorphismAtom = std::variant<FiberTranslation, AffineLift>;

// Exact symplectomorphism presented as a chain of atoms, applied left to
// right. Every map built from these atoms has an explicit primitive, so the
// action identities below are checkable without quadrature of the defect.
struct ExactSymplectomorphism {
  std::string name;
  std::vector<SymplectomorphismAtom> atoms;
};

// Catalog builders.
ExactSymplectomorphism gaussian_fiber_translation(int dim, double amp, const Vec& center,
                                                  double width);
ExactSymplectomorphism translation_lift(const Vec& shift);
ExactSymplectomorphism dilation_lift(const Vec& factors);  // diagonal lift, nonzero entries

// Apply a, then b.
ExactSymplectomorphism compose(const ExactSymplectomorphism& a, const ExactSymplectomorphism& b);
ExactSymplectomorphism inverse(const ExactSymplectomorphism& m);

CotangentState apply(const ExactSymplectomorphism& m, const CotangentState& s);

// Image of an orbit segment of sys: a segment of mapped_system(sys, m) on the
// same time grid. Energy and first-integral logs transfer verbatim because
// the mapped Hamiltonian and integrals are the pullbacks by the inverse map.
OrbitSegment apply(const ExactSymplectomorphism& m, const OrbitSegment& seg);

// Primitive S of Psi^* lambda - lambda = dS, accumulated along the chain
// (each atom's primitive is evaluated at the partial image).
double primitive_value(const ExactSymplectomorphism& m, const CotangentState& s);

// The system with Hamiltonian H o Psi^{-1}; the Lagrangian side is rebuilt
// structurally atom by atom (fiber translations add df . v, lifts pull back
// through the base map). Reference constants carry over unchanged; closed-
// orbit initial states do not, so has_closed_orbit_states is cleared.
LagrangianSystem mapped_system(const LagrangianSystem& sys, const ExactSymplectomorphism& m);

// |A'(image loop) - A(loop)| where A' is the mapped system's orbit action at
// the same k. Exactness makes the two agree on closed orbits. The segment
// must close up to 1e-8 in phase distance.
double action_identity_residual(const LagrangianSystem& sys, const ExactSymplectomorphism& m,
                                const OrbitSegment& closed_orbit, double k);

// Critical-value bisection run on the system and on its image, preceded by a
// fiberwise-convexity probe of the mapped Lagrangian over 64 sampled states
// (failure is a NumericalError: the image left the Tonelli class numerically).
struct CuInvarianceReport {
  CriticalValueEstimate original;
  CriticalValueEstimate mapped;
  double convexity_min;
  bool overlap;  // the two brackets intersect
};
CuInvarianceReport cu_invariance_report(const LagrangianSystem& sys,
                                        const ExactSymplectomorphism& m, double k_lo, double k_hi,
                                        const CuConfig& cfg);

// Transports one phase-barrier family member through the map: minimize the
// x0 = x1 = pi(X) endpoint problem at the smallest configured duration, lift
// to an orbit of sys, push it forward, and compare the image action under the
// mapped system against the source action plus the primitive correction
// S(end) - S(start). The correction vanishes on exactly closed members.
struct BarrierTransportCheck {
  double source_action;
  double image_action;
  double s_correction;
  double residual;  // |image - source - correction|
  double source_gap, image_gap;  // summed endpoint phase gaps vs X and its image
};
BarrierTransportCheck barrier_transport_check(const LagrangianSystem& sys,
                                              const ExactSymplectomorphism& m,
                                              const CotangentState& X, double k,
                                              const PhaseBarrierConfig& cfg);

}  // namespace manelab
