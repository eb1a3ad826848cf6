#include "manelab/systems.hpp"

#include <cmath>

#include "manelab/flow.hpp"
#include "manelab/variational.hpp"

namespace manelab {

SystemKind parse_system_kind(const std::string& name) {
  if (name == "flat") return SystemKind::flat;
  if (name == "heisenberg") return SystemKind::heisenberg;
  if (name == "psl2r") return SystemKind::psl2r;
  if (name == "open_plane") return SystemKind::open_plane;
  throw InputError("unknown system kind: " + name);
}

std::string system_kind_name(SystemKind k) {
  switch (k) {
    case SystemKind::flat: return "flat";
    case SystemKind::heisenberg: return "heisenberg";
    case SystemKind::psl2r: return "psl2r";
    case SystemKind::open_plane: return "open_plane";
  }
  return "?";
}

namespace {

double get_param(const SystemSpec& spec, const std::string& key, double fallback) {
  auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

LagrangianSystem build_flat(const SystemSpec& spec) {
  int dim = static_cast<int>(std::lround(get_param(spec, "dim", 2)));
  if (dim < 1 || dim > Vec::kMaxDim) throw InputError("flat: dim out of range");
  LagrangianSystem s;
  s.name = "flat";
  s.kind = SystemKind::flat;
  s.dim = dim;
  s.lagrangian = [](const Vec&, const Vec& v) { return 0.5 * dot(v, v); };
  s.dLdv = [](const Vec&, const Vec& v) { return v; };
  s.dLdx = [dim](const Vec&, const Vec&) { return Vec::zeros(dim); };
  s.hamiltonian = [](const Vec&, const Vec& p) { return 0.5 * dot(p, p); };
  s.ham_vector_field = [dim](const Vec&, const Vec& p, Vec& dx, Vec& dp) {
    dx = p;
    dp = Vec::zeros(dim);
  };
  for (int i = 0; i < dim; ++i)
    s.first_integrals.push_back({"p" + std::to_string(i),
                                 [i](const CotangentState& st) { return st.momentum[i]; }});
  s.chart_ok = [](const Vec& x) { return all_finite(x); };
  s.sample_lo = Vec::zeros(dim);
  s.sample_hi = Vec::zeros(dim);
  for (int i = 0; i < dim; ++i) {
    s.sample_lo[i] = -2;
    s.sample_hi[i] = 2;
  }
  ReferenceData ref;
  ref.cu = 0.0;
  ref.c_abelian = 0.0;
  ref.barrier_diag = 0.0;
  s.reference = ref;
  return s;
}

LagrangianSystem build_heisenberg() {
  LagrangianSystem s;
  s.name = "heisenberg";
  s.kind = SystemKind::heisenberg;
  s.dim = 3;
  // L = (vx^2 + vy^2 + w^2)/2 + w with w = vz - x*vy (left-invariant frame).
  s.lagrangian = [](const Vec& x, const Vec& v) {
    double w = v[2] - x[0] * v[1];
    return 0.5 * (v[0] * v[0] + v[1] * v[1] + w * w) + w;
  };
  s.dLdv = [](const Vec& x, const Vec& v) {
    double w = v[2] - x[0] * v[1];
    return Vec{v[0], v[1] - x[0] * (w + 1), w + 1};
  };
  s.dLdx = [](const Vec& x, const Vec& v) {
    double w = v[2] - x[0] * v[1];
    return Vec{-(w + 1) * v[1], 0.0, 0.0};
  };
  // H = (px^2 + (py + x pz)^2 + (pz - 1)^2)/2.
  s.hamiltonian = [](const Vec& x, const Vec& p) {
    double u = p[1] + x[0] * p[2];
    return 0.5 * (p[0] * p[0] + u * u + (p[2] - 1) * (p[2] - 1));
  };
  s.ham_vector_field = [](const Vec& x, const Vec& p, Vec& dx, Vec& dp) {
    double u = p[1] + x[0] * p[2];
    dx = Vec{p[0], u, u * x[0] + p[2] - 1};
    dp = Vec{-u * p[2], 0.0, 0.0};
  };
  s.first_integrals.push_back({"p_y", [](const CotangentState& st) { return st.momentum[1]; }});
  s.first_integrals.push_back({"p_z", [](const CotangentState& st) { return st.momentum[2]; }});
  s.chart_ok = [](const Vec& x) { return all_finite(x); };
  s.sample_lo = Vec{-2, -2, -2};
  s.sample_hi = Vec{2, 2, 2};
  ReferenceData ref;
  ref.cu = 0.5;
  ref.c_abelian = 0.5;
  ref.barrier_diag = 2 * M_PI;
  ref.orbit_action = [](double k) { return 2 * M_PI * (1 - std::sqrt(1 - 2 * k)); };
  ref.orbit_period = [](double k) { return 2 * M_PI / std::sqrt(1 - 2 * k); };
  ref.k_min = 0.0;
  ref.k_max = 0.5;
  s.reference = ref;
  s.has_closed_orbit_states = true;
  return s;
}

LagrangianSystem build_psl2r() {
  LagrangianSystem s;
  s.name = "psl2r";
  s.kind = SystemKind::psl2r;
  s.dim = 3;  // chart (x, y, theta), y > 0, theta unwrapped
  // L = (vx^2 + vy^2 + (y vth + vx)^2)/(2 y^2) + vth + vx/y.
  s.lagrangian = [](const Vec& x, const Vec& v) {
    double y = x[1];
    double c = y * v[2] + v[0];
    return (v[0] * v[0] + v[1] * v[1] + c * c) / (2 * y * y) + v[2] + v[0] / y;
  };
  s.dLdv = [](const Vec& x, const Vec& v) {
    double y = x[1];
    double c = y * v[2] + v[0];
    return Vec{(v[0] + c) / (y * y) + 1 / y, v[1] / (y * y), c / y + 1};
  };
  s.dLdx = [](const Vec& x, const Vec& v) {
    double y = x[1];
    double c = y * v[2] + v[0];
    double q2 = v[0] * v[0] + v[1] * v[1] + c * c;
    return Vec{0.0, -q2 / (y * y * y) + c * v[2] / (y * y) - v[0] / (y * y), 0.0};
  };
  // H = ((y px - pth)^2 + (y py)^2 + (pth - 1)^2)/2.
  s.hamiltonian = [](const Vec& x, const Vec& p) {
    double y = x[1];
    double u = y * p[0] - p[2];
    double w = y * p[1];
    return 0.5 * (u * u + w * w + (p[2] - 1) * (p[2] - 1));
  };
  s.ham_vector_field = [](const Vec& x, const Vec& p, Vec& dx, Vec& dp) {
    double y = x[1];
    double u = y * p[0] - p[2];
    dx = Vec{y * u, y * y * p[1], 2 * p[2] - y * p[0] - 1};
    dp = Vec{0.0, -(u * p[0] + y * p[1] * p[1]), 0.0};
  };
  s.first_integrals.push_back({"p_gamma", [](const CotangentState& st) { return st.momentum[2]; }});
  // f = dtheta/dt + dx/dt / y reduces to pth - 1 along the flow.
  s.first_integrals.push_back({"f", [](const CotangentState& st) { return st.momentum[2] - 1; }});
  s.chart_ok = [](const Vec& x) { return all_finite(x) && x[1] > 0; };
  s.sample_lo = Vec{-2, 0.25, -2};
  s.sample_hi = Vec{2, 3, 2};
  ReferenceData ref;
  ref.cu = 0.25;
  ref.c_abelian = 0.5;
  ref.barrier_diag = M_PI;
  ref.orbit_action = [](double k) { return M_PI * (1 - std::sqrt(1 - 4 * k)); };
  ref.orbit_period = [](double k) { return 2 * M_PI / std::sqrt(1 - 4 * k); };
  ref.k_min = 0.0;
  ref.k_max = 0.25;
  s.reference = ref;
  s.has_closed_orbit_states = true;
  return s;
}

struct OpenPlaneBlend {
  double r0, r1, u0;
  double a3, a4, a5;  // quintic on t = rho - r0

  double value(double rho) const {
    if (rho <= r0) return u0;
    if (rho >= r1) return 1 / rho;
    double t = rho - r0;
    return u0 + ((a5 * t + a4) * t + a3) * t * t * t;
  }
  double deriv(double rho) const {
    if (rho <= r0) return 0;
    if (rho >= r1) return -1 / (rho * rho);
    double t = rho - r0;
    return (3 * a3 + (4 * a4 + 5 * a5 * t) * t) * t * t;
  }
};

OpenPlaneBlend make_blend(double r0, double r1, double u0) {
  if (!(r0 > 0) || !(r1 > r0)) throw InputError("open_plane: need 0 < r_inner < r_outer");
  double d = r1 - r0;
  // match value and first two derivatives of 1/rho at r1 (inner side is flat)
  std::vector<double> M = {d * d * d,     d * d * d * d,  d * d * d * d * d,
                           3 * d * d,     4 * d * d * d,  5 * d * d * d * d,
                           6 * d,         12 * d * d,     20 * d * d * d};
  Vec rhs{1 / r1 - u0, -1 / (r1 * r1), 2 / (r1 * r1 * r1)};
  Vec a = solve_dense(std::move(M), rhs);
  return {r0, r1, u0, a[0], a[1], a[2]};
}

LagrangianSystem build_open_plane(const SystemSpec& spec) {
  double r0 = get_param(spec, "r_inner", 1.0);
  double r1 = get_param(spec, "r_outer", 2.0);
  double u0 = get_param(spec, "plateau", 2.0);
  OpenPlaneBlend U = make_blend(r0, r1, u0);
  LagrangianSystem s;
  s.name = "open_plane";
  s.kind = SystemKind::open_plane;
  s.dim = 2;
  s.lagrangian = [U](const Vec& x, const Vec& v) {
    return 0.5 * dot(v, v) + U.value(norm2(x));
  };
  s.dLdv = [](const Vec&, const Vec& v) { return v; };
  s.dLdx = [U](const Vec& x, const Vec&) {
    double rho = norm2(x);
    if (rho < 1e-14) return Vec{0.0, 0.0};
    double du = U.deriv(rho);
    return Vec{du * x[0] / rho, du * x[1] / rho};
  };
  s.hamiltonian = [U](const Vec& x, const Vec& p) {
    return 0.5 * dot(p, p) - U.value(norm2(x));
  };
  s.ham_vector_field = [U](const Vec& x, const Vec& p, Vec& dx, Vec& dp) {
    dx = p;
    double rho = norm2(x);
    if (rho < 1e-14) {
      dp = Vec{0.0, 0.0};
      return;
    }
    double du = U.deriv(rho);
    dp = Vec{du * x[0] / rho, du * x[1] / rho};
  };
  s.chart_ok = [](const Vec& x) { return all_finite(x); };
  s.sample_lo = Vec{-4, -4};
  s.sample_hi = Vec{4, 4};
  ReferenceData ref;
  ref.cu = 0.0;
  s.reference = ref;
  return s;
}

}  // namespace

LagrangianSystem build_system(const SystemSpec& spec) {
  switch (spec.kind) {
    case SystemKind::flat: return build_flat(spec);
    case SystemKind::heisenberg: return build_heisenberg();
    case SystemKind::psl2r: return build_psl2r();
    case SystemKind::open_plane: return build_open_plane(spec);
  }
  throw InputError("build_system: unknown kind");
}

ReferenceOrbit reference_orbit(const LagrangianSystem& sys, double k) {
  if (!sys.reference || !sys.reference->orbit_period)
    throw InputError(sys.name + ": no closed-form orbit family");
  const ReferenceData& r = *sys.reference;
  if (!(k > r.k_min && k < r.k_max))
    throw InputError(sys.name + ": k outside the closed-orbit range");
  return {r.orbit_period(k), r.orbit_action(k)};
}

CotangentState reference_orbit_state(const LagrangianSystem& sys, double k) {
  if (!sys.has_closed_orbit_states)
    throw InputError(sys.name + ": closed-orbit initial states unavailable");
  reference_orbit(sys, k);  // validates the range
  if (sys.kind == SystemKind::heisenberg) {
    double c = std::sqrt(1 - 2 * k);
    double rr = std::sqrt(2 * (1 - c) / c);
    return {{Vec{rr, 0, 0}}, Vec{0, 0, c}};
  }
  // psl2r: p_gamma in (1/2, 1), in-plane momentum radius rho
  double pg = 0.5 * (1 + std::sqrt(1 - 4 * k));
  double rho = std::sqrt((3 * pg - 1) * (1 - pg));
  return {{Vec{0, 1, 0}}, Vec{rho + pg, 0, pg}};
}

PeriodOrbit reference_orbit_with_period(const LagrangianSystem& sys, double T) {
  if (!sys.has_closed_orbit_states)
    throw InputError(sys.name + ": closed-orbit initial states unavailable");
  if (!(T > 2 * M_PI)) throw InputError(sys.name + ": no closed orbit with period <= 2*pi");
  double k;
  if (sys.kind == SystemKind::heisenberg) {
    double c = 2 * M_PI / T;
    k = 0.5 * (1 - c * c);
  } else {
    double pg = 0.5 + M_PI / T;
    k = pg * (1 - pg);
  }
  ReferenceOrbit ro = reference_orbit(sys, k);
  return {reference_orbit_state(sys, k), k, ro.action};
}

VerticalCheck vertical_orbit_check(const LagrangianSystem& sys, const ChartPoint& x,
                                   double duration, int nodes) {
  if (sys.kind != SystemKind::heisenberg)
    throw InputError("vertical_orbit_check: only defined for the nilpotent model");
  if (duration < 0) throw InputError("vertical_orbit_check: negative duration");
  if (duration == 0) return {0.0, 0.0};
  int m = std::max(4, nodes);
  DiscretePath path;
  path.duration = duration;
  path.closed = false;
  path.nodes.resize(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) {
    double t = duration * i / m;
    path.nodes[static_cast<std::size_t>(i)] = Vec{x.coords[0], x.coords[1], x.coords[2] - t};
  }
  return {el_residual(sys, path), path_action(sys, path, 0.5)};
}

Vec psl2r_left_invariant_momenta(const CotangentState& s) {
  double y = s.base.coords[1], th = s.base.coords[2];
  double u = y * s.momentum[0] - s.momentum[2];
  double w = y * s.momentum[1];
  return Vec{u * std::cos(th) + w * std::sin(th), -u * std::sin(th) + w * std::cos(th),
             s.momentum[2]};
}

CotangentState psl2r_horocycle_state(double p_alpha, double p_beta) {
  if (std::abs(p_alpha * p_alpha + p_beta * p_beta - 0.25) > 1e-10)
    throw InputError("horocycle state requires p_alpha^2 + p_beta^2 = 1/4");
  return {{Vec{0, 1, 0}}, Vec{p_alpha + 0.5, p_beta, 0.5}};
}

double open_plane_potential(const LagrangianSystem& sys, double rho) {
  if (sys.kind != SystemKind::open_plane) throw InputError("open_plane_potential: wrong system");
  Vec x{rho, 0.0};
  Vec v{0.0, 0.0};
  return sys.lagrangian(x, v);
}

}  // namespace manelab
