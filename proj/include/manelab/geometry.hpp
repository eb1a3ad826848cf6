#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace manelab {

// Bad user-supplied input (configs, ranges, wrong system kind). CLI exit code 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical breakdown (failed Newton solve, chart exit, non-finite values). CLI exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fixed-capacity coordinate vector. Configuration dimensions here are tiny
// (2 or 3), so avoiding heap allocation in the hot evaluation loops matters.
struct Vec {
  static constexpr int kMaxDim = 8;
  std::array<double, kMaxDim> a{};
  int n = 0;

  Vec() = default;
  explicit Vec(int dim) : n(dim) {}
  Vec(std::initializer_list<double> xs) : n(static_cast<int>(xs.size())) {
    int i = 0;
    for (double x : xs) a[static_cast<std::size_t>(i++)] = x;
  }
  static Vec zeros(int dim) { return Vec(dim); }
  static Vec from_std(const std::vector<double>& xs) {
    if (xs.size() > kMaxDim) throw InputError("vector dimension exceeds supported maximum");
    Vec v(static_cast<int>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) v.a[i] = xs[i];
    return v;
  }
  std::vector<double> to_std() const { return std::vector<double>(a.begin(), a.begin() + n); }

  double& operator[](int i) { return a[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return a[static_cast<std::size_t>(i)]; }
  int size() const { return n; }
};

inline Vec operator+(const Vec& x, const Vec& y) {
  Vec r(x.n);
  for (int i = 0; i < x.n; ++i) r[i] = x[i] + y[i];
  return r;
}
inline Vec operator-(const Vec& x, const Vec& y) {
  Vec r(x.n);
  for (int i = 0; i < x.n; ++i) r[i] = x[i] - y[i];
  return r;
}
inline Vec operator*(double s, const Vec& x) {
  Vec r(x.n);
  for (int i = 0; i < x.n; ++i) r[i] = s * x[i];
  return r;
}
inline double dot(const Vec& x, const Vec& y) {
  double s = 0;
  for (int i = 0; i < x.n; ++i) s += x[i] * y[i];
  return s;
}
inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }
inline double norm_inf(const Vec& x) {
  double s = 0;
  for (int i = 0; i < x.n; ++i) s = std::max(s, std::abs(x[i]));
  return s;
}
inline double dist(const Vec& x, const Vec& y) { return norm2(x - y); }
inline bool all_finite(const Vec& x) {
  for (int i = 0; i < x.n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

// A point of the configuration chart (global chart of the universal cover).
struct ChartPoint {
  Vec coords;
};

struct TangentState {
  ChartPoint base;
  Vec velocity;
};

struct CotangentState {
  ChartPoint base;
  Vec momentum;
};

// Chart-coordinate distance between two phase points (base and momentum stacked).
inline double phase_dist(const CotangentState& a, const CotangentState& b) {
  double s = 0;
  for (int i = 0; i < a.base.coords.n; ++i) {
    double db = a.base.coords[i] - b.base.coords[i];
    double dp = a.momentum[i] - b.momentum[i];
    s += db * db + dp * dp;
  }
  return std::sqrt(s);
}

// Closed-form reference constants attached to a model system. Orbit action and
// period are functions of the energy parameter k on (k_min, k_max); systems
// without a closed-orbit family leave them empty.
struct ReferenceData {
  double cu = 0.0;
  std::optional<double> c_abelian;
  std::optional<double> barrier_diag;
  std::function<double(double)> orbit_action;
  std::function<double(double)> orbit_period;
  double k_min = 0.0;
  double k_max = 0.0;
};

enum class SystemKind { flat, heisenberg, psl2r, open_plane };

// A Tonelli Lagrangian presented in one global chart, together with its
// Legendre-dual Hamiltonian data. All callbacks take raw coordinate/velocity
// (or momentum) vectors of length dim.
struct LagrangianSystem {
  std::string name;
  SystemKind kind = SystemKind::flat;
  int dim = 0;

  std::function<double(const Vec&, const Vec&)> lagrangian;  // L(x, v)
  std::function<Vec(const Vec&, const Vec&)> dLdv;
  std::function<Vec(const Vec&, const Vec&)> dLdx;
  std::function<double(const Vec&, const Vec&)> hamiltonian;  // H(x, p)
  // Hamiltonian vector field: fills (dx, dp) = (dH/dp, -dH/dx).
  std::function<void(const Vec&, const Vec&, Vec&, Vec&)> ham_vector_field;

  // True invariants of the flow, logged and drift-checked along orbits.
  std::vector<std::pair<std::string, std::function<double(const CotangentState&)>>> first_integrals;

  // Chart admissibility (e.g. y > 0 for the half-space chart). Default: finite coords.
  std::function<bool(const Vec&)> chart_ok;

  // Compact box used by sampling-based probes and tests.
  Vec sample_lo, sample_hi;

  std::optional<ReferenceData> reference;
  // True only for factory-built systems whose closed-orbit initial states are
  // available in closed form (not preserved by coordinate changes).
  bool has_closed_orbit_states = false;
};

// Fiber derivative p = dL/dv at (x, v).
CotangentState legendre_forward(const LagrangianSystem& sys, const TangentState& s);

// Inverts the fiber derivative by a damped Newton iteration (finite-difference
// Jacobian). Throws NumericalError if 50 iterations do not reach tolerance.
TangentState legendre_inverse(const LagrangianSystem& sys, const CotangentState& s);

// E(x, v) = <dL/dv, v> - L(x, v).
double energy(const LagrangianSystem& sys, const TangentState& s);

// |H(x, dL/dv) - (<dL/dv, v> - L)|; zero when H is the exact Fenchel dual.
double fenchel_residual(const LagrangianSystem& sys, const TangentState& s);

// Max-abs mismatch between ham_vector_field and (dH/dp, -dH/dx) computed by
// central differences of the Hamiltonian callback.
double hamiltonian_field_residual(const LagrangianSystem& sys, const CotangentState& s);

// Smallest eigenvalue of the finite-difference velocity Hessian of L at (x, v).
// Positive values certify fiberwise convexity at the probe point.
double convexity_min_eig(const LagrangianSystem& sys, const TangentState& s);

// Diagonal of the velocity Hessian of L at (x, v), by central differences.
// Used as a curvature scale by the optimizer's preconditioner.
Vec d2Ldv2_diag(const LagrangianSystem& sys, const Vec& x, const Vec& v);

// Solves the small dense system A w = b in place (partial pivoting).
// Throws NumericalError on a numerically singular matrix.
Vec solve_dense(std::vector<double> A, Vec b);

}  // namespace manelab
