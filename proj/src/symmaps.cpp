#include "manelab/symmaps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "manelab/rng.hpp"

namespace manelab {

namespace {

Vec matvec(const std::vector<Vec>& rows, const Vec& v) {
  Vec r(static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) r[static_cast<int>(i)] = dot(rows[i], v);
  return r;
}

// rows^T v, i.e. multiplication by the transpose of the stored matrix
Vec mat_t_vec(const std::vector<Vec>& rows, const Vec& v) {
  int n = rows.empty() ? 0 : rows[0].n;
  Vec r(n);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < n; ++j) r[j] += rows[i][j] * v[static_cast<int>(i)];
  return r;
}

std::vector<Vec> identity_rows(int n) {
  std::vector<Vec> rows(static_cast<std::size_t>(n), Vec(n));
  for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)][i] = 1.0;
  return rows;
}

CotangentState apply_atom(const SymplectomorphismAtom& atom, const CotangentState& s) {
  if (const auto* ft = std::get_if<FiberTranslation>(&atom))
    return {s.base, s.momentum + ft->df(s.base.coords)};
  const auto& al = std::get<AffineLift>(atom);
  return {{matvec(al.A, s.base.coords) + al.b}, mat_t_vec(al.A_inv, s.momentum)};
}

SymplectomorphismAtom inverse_atom(const SymplectomorphismAtom& atom) {
  if (const auto* ftp = std::get_if<FiberTranslation>(&atom)) {
    FiberTranslation src = *ftp;
    FiberTranslation inv;
    inv.f = [src](const Vec& x) { return -src.f(x); };
    inv.df = [src](const Vec& x) { return -1.0 * src.df(x); };
    inv.hessf = [src](const Vec& x) {
      std::vector<Vec> rows = src.hessf(x);
      for (Vec& r : rows) r = -1.0 * r;
      return rows;
    };
    return inv;
  }
  const auto& al = std::get<AffineLift>(atom);
  AffineLift inv;
  inv.A = al.A_inv;
  inv.b = -1.0 * matvec(al.A_inv, al.b);
  inv.A_inv = al.A;
  return inv;
}

// One conjugation step: the system whose Hamiltonian is base's composed with
// the atom's inverse, with the Lagrangian side written out analytically.
LagrangianSystem wrap_atom(const LagrangianSystem& base, const SymplectomorphismAtom& atom) {
  auto prev = std::make_shared<const LagrangianSystem>(base);
  LagrangianSystem out = base;

  if (const auto* ftp = std::get_if<FiberTranslation>(&atom)) {
    FiberTranslation ft = *ftp;
    out.lagrangian = [prev, ft](const Vec& x, const Vec& v) {
      return prev->lagrangian(x, v) + dot(ft.df(x), v);
    };
    out.dLdv = [prev, ft](const Vec& x, const Vec& v) { return prev->dLdv(x, v) + ft.df(x); };
    out.dLdx = [prev, ft](const Vec& x, const Vec& v) {
      return prev->dLdx(x, v) + matvec(ft.hessf(x), v);
    };
    out.hamiltonian = [prev, ft](const Vec& x, const Vec& p) {
      return prev->hamiltonian(x, p - ft.df(x));
    };
    out.ham_vector_field = [prev, ft](const Vec& x, const Vec& p, Vec& dx, Vec& dp) {
      prev->ham_vector_field(x, p - ft.df(x), dx, dp);
      dp = dp + matvec(ft.hessf(x), dx);
    };
    out.first_integrals.clear();
    for (const auto& [nm, fn] : prev->first_integrals) {
      auto inner = fn;
      out.first_integrals.emplace_back(nm, [inner, ft](const CotangentState& s) {
        return inner({s.base, s.momentum - ft.df(s.base.coords)});
      });
    }
    return out;
  }

  AffineLift al = std::get<AffineLift>(atom);
  auto phi_inv = [al](const Vec& x) { return matvec(al.A_inv, x - al.b); };
  out.lagrangian = [prev, al, phi_inv](const Vec& x, const Vec& v) {
    return prev->lagrangian(phi_inv(x), matvec(al.A_inv, v));
  };
  out.dLdv = [prev, al, phi_inv](const Vec& x, const Vec& v) {
    return mat_t_vec(al.A_inv, prev->dLdv(phi_inv(x), matvec(al.A_inv, v)));
  };
  out.dLdx = [prev, al, phi_inv](const Vec& x, const Vec& v) {
    return mat_t_vec(al.A_inv, prev->dLdx(phi_inv(x), matvec(al.A_inv, v)));
  };
  out.hamiltonian = [prev, al, phi_inv](const Vec& x, const Vec& p) {
    return prev->hamiltonian(phi_inv(x), mat_t_vec(al.A, p));
  };
  out.ham_vector_field = [prev, al, phi_inv](const Vec& x, const Vec& p, Vec& dx, Vec& dp) {
    Vec dx0(x.n), dp0(x.n);
    prev->ham_vector_field(phi_inv(x), mat_t_vec(al.A, p), dx0, dp0);
    dx = matvec(al.A, dx0);
    dp = mat_t_vec(al.A_inv, dp0);
  };
  out.first_integrals.clear();
  for (const auto& [nm, fn] : prev->first_integrals) {
    auto inner = fn;
    out.first_integrals.emplace_back(nm, [inner, al, phi_inv](const CotangentState& s) {
      return inner({{phi_inv(s.base.coords)}, mat_t_vec(al.A, s.momentum)});
    });
  }
  auto prev_chart = prev->chart_ok;
  out.chart_ok = [prev_chart, phi_inv](const Vec& x) { return prev_chart(phi_inv(x)); };

  // sampling box: axis-aligned hull of the image of the previous box
  int n = base.dim;
  Vec lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = std::numeric_limits<double>::infinity();
    hi[i] = -std::numeric_limits<double>::infinity();
  }
  for (int mask = 0; mask < (1 << n); ++mask) {
    Vec c(n);
    for (int i = 0; i < n; ++i)
      c[i] = ((mask >> i) & 1) ? base.sample_hi[i] : base.sample_lo[i];
    Vec img = matvec(al.A, c) + al.b;
    for (int i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], img[i]);
      hi[i] = std::max(hi[i], img[i]);
    }
  }
  out.sample_lo = lo;
  out.sample_hi = hi;
  return out;
}

}  // namespace

ExactSymplectomorphism gaussian_fiber_translation(int dim, double amp, const Vec& center,
                                                  double width) {
  if (center.n != dim) throw InputError("gaussian_fiber_translation: center dimension mismatch");
  if (!(width > 0) || !std::isfinite(amp))
    throw InputError("gaussian_fiber_translation: needs width > 0 and finite amplitude");
  const double w2 = width * width;
  FiberTranslation ft;
  ft.f = [amp, center, w2](const Vec& x) {
    Vec d = x - center;
    return amp * std::exp(-0.5 * dot(d, d) / w2);
  };
  ft.df = [amp, center, w2](const Vec& x) {
    Vec d = x - center;
    double g = amp * std::exp(-0.5 * dot(d, d) / w2);
    return (-g / w2) * d;
  };
  ft.hessf = [amp, center, w2](const Vec& x) {
    Vec d = x - center;
    double g = amp * std::exp(-0.5 * dot(d, d) / w2);
    std::vector<Vec> rows(static_cast<std::size_t>(x.n), Vec(x.n));
    for (int i = 0; i < x.n; ++i) {
      Vec& r = rows[static_cast<std::size_t>(i)];
      for (int j = 0; j < x.n; ++j)
        r[j] = g * (d[i] * d[j] / (w2 * w2) - (i == j ? 1.0 / w2 : 0.0));
    }
    return rows;
  };
  ExactSymplectomorphism m;
  m.name = "gauss_fiber";
  m.atoms.push_back(ft);
  return m;
}

ExactSymplectomorphism translation_lift(const Vec& shift) {
  if (shift.n < 1) throw InputError("translation_lift: empty shift");
  AffineLift al{identity_rows(shift.n), shift, identity_rows(shift.n)};
  ExactSymplectomorphism m;
  m.name = "translate";
  m.atoms.push_back(al);
  return m;
}

ExactSymplectomorphism dilation_lift(const Vec& factors) {
  if (factors.n < 1) throw InputError("dilation_lift: empty factor list");
  AffineLift al{identity_rows(factors.n), Vec(factors.n), identity_rows(factors.n)};
  for (int i = 0; i < factors.n; ++i) {
    if (factors[i] == 0 || !std::isfinite(factors[i]))
      throw InputError("dilation_lift: factors must be nonzero and finite");
    al.A[static_cast<std::size_t>(i)][i] = factors[i];
    al.A_inv[static_cast<std::size_t>(i)][i] = 1.0 / factors[i];
  }
  ExactSymplectomorphism m;
  m.name = "dilate";
  m.atoms.push_back(al);
  return m;
}

ExactSymplectomorphism compose(const ExactSymplectomorphism& a, const ExactSymplectomorphism& b) {
  ExactSymplectomorphism m;
  m.name = a.name + "->" + b.name;
  m.atoms = a.atoms;
  m.atoms.insert(m.atoms.end(), b.atoms.begin(), b.atoms.end());
  return m;
}

ExactSymplectomorphism inverse(const ExactSymplectomorphism& m) {
  ExactSymplectomorphism inv;
  inv.name = "inv(" + m.name + ")";
  for (auto it = m.atoms.rbegin(); it != m.atoms.rend(); ++it)
    inv.atoms.push_back(inverse_atom(*it));
  return inv;
}

CotangentState apply(const ExactSymplectomorphism& m, const CotangentState& s) {
  CotangentState z = s;
  for (const auto& atom : m.atoms) z = apply_atom(atom, z);
  return z;
}

OrbitSegment apply(const ExactSymplectomorphism& m, const OrbitSegment& seg) {
  OrbitSegment out = seg;
  for (CotangentState& st : out.states) st = apply(m, st);
  return out;
}

double primitive_value(const ExactSymplectomorphism& m, const CotangentState& s) {
  double S = 0;
  CotangentState z = s;
  for (const auto& atom : m.atoms) {
    if (const auto* ft = std::get_if<FiberTranslation>(&atom)) S += ft->f(z.base.coords);
    z = apply_atom(atom, z);
  }
  return S;
}

LagrangianSystem mapped_system(const LagrangianSystem& sys, const ExactSymplectomorphism& m) {
  LagrangianSystem out = sys;
  for (const auto& atom : m.atoms) out = wrap_atom(out, atom);
  out.name = sys.name + "|" + m.name;
  out.has_closed_orbit_states = false;
  return out;
}

double action_identity_residual(const LagrangianSystem& sys, const ExactSymplectomorphism& m,
                                const OrbitSegment& closed_orbit, double k) {
  if (phase_dist(closed_orbit.front(), closed_orbit.back()) > 1e-8)
    throw InputError("action_identity_residual: segment does not close");
  LagrangianSystem mapped = mapped_system(sys, m);
  OrbitSegment image = apply(m, closed_orbit);
  return std::abs(orbit_action(mapped, image, k) - orbit_action(sys, closed_orbit, k));
}

CuInvarianceReport cu_invariance_report(const LagrangianSystem& sys,
                                        const ExactSymplectomorphism& m, double k_lo, double k_hi,
                                        const CuConfig& cfg) {
  LagrangianSystem mapped = mapped_system(sys, m);

  Rng rng(cfg.seed, {0xc04e});
  double cmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 64; ++i) {
    Vec x(sys.dim), v(sys.dim);
    bool ok = false;
    for (int tries = 0; tries < 200 && !ok; ++tries) {
      for (int d = 0; d < sys.dim; ++d)
        x[d] = rng.uniform(mapped.sample_lo[d], mapped.sample_hi[d]);
      ok = mapped.chart_ok(x);
    }
    if (!ok) throw NumericalError("cu_invariance_report: could not sample the mapped chart");
    for (int d = 0; d < sys.dim; ++d) v[d] = rng.uniform(-2.0, 2.0);
    cmin = std::min(cmin, convexity_min_eig(mapped, {{x}, v}));
  }
  if (!(cmin > 1e-7))
    throw NumericalError("cu_invariance_report: mapped Lagrangian fails the convexity probe");

  CuInvarianceReport rep{estimate_cu(sys, k_lo, k_hi, cfg), estimate_cu(mapped, k_lo, k_hi, cfg),
                         cmin, false};
  rep.overlap = rep.original.lower <= rep.mapped.upper && rep.mapped.lower <= rep.original.upper;
  return rep;
}

BarrierTransportCheck barrier_transport_check(const LagrangianSystem& sys,
                                              const ExactSymplectomorphism& m,
                                              const CotangentState& X, double k,
                                              const PhaseBarrierConfig& cfg) {
  std::vector<double> durations = cfg.durations;
  if (durations.empty())
    for (int j = 0; j <= 3; ++j) durations.push_back(8 * M_PI * std::pow(2.0, j));
  double T = *std::min_element(durations.begin(), durations.end());

  MinimizeOutcome mo = minimize_fixed_endpoints(sys, X.base, X.base, T, cfg.minimize);
  IntegratorConfig ic = cfg.integrator;
  long steps = std::max<long>(1, std::llround(T / ic.step));
  ic.record_stride = static_cast<int>(std::max<long>(1, steps / 4096));
  OrbitSegment seg = lift_path_to_orbit(sys, mo.path, ic);

  LagrangianSystem mapped = mapped_system(sys, m);
  OrbitSegment image = apply(m, seg);
  CotangentState Y = apply(m, X);

  BarrierTransportCheck out{};
  out.source_action = orbit_action(sys, seg, k);
  out.image_action = orbit_action(mapped, image, k);
  out.s_correction = primitive_value(m, seg.back()) - primitive_value(m, seg.front());
  out.residual = std::abs(out.image_action - out.source_action - out.s_correction);
  out.source_gap = phase_dist(seg.front(), X) + phase_dist(seg.back(), X);
  out.image_gap = phase_dist(image.front(), Y) + phase_dist(image.back(), Y);
  return out;
}

}  // namespace manelab
