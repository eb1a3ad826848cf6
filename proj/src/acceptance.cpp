#include "manelab/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>

#include "manelab/barrier.hpp"
#include "manelab/critical_value.hpp"
#include "manelab/flow.hpp"
#include "manelab/measures.hpp"
#include "manelab/rng.hpp"
#include "manelab/symmaps.hpp"
#include "manelab/systems.hpp"
#include "manelab/variational.hpp"

namespace manelab {

namespace {

std::string strf(const char* fmt, ...) {
  char buf[768];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

LagrangianSystem make(SystemKind kind) {
  SystemSpec spec;
  spec.kind = kind;
  return build_system(spec);
}

std::uint64_t subseed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return Rng(seed, {a, b}).next_u64();
}

bool wants(std::optional<SystemKind> only, SystemKind k) { return !only || *only == k; }

Vec sample_box(const LagrangianSystem& sys, Rng& rng) {
  Vec x(sys.dim);
  for (int tries = 0; tries < 200; ++tries) {
    for (int d = 0; d < sys.dim; ++d) x[d] = rng.uniform(sys.sample_lo[d], sys.sample_hi[d]);
    if (sys.chart_ok(x)) return x;
  }
  throw NumericalError(sys.name + ": could not sample an admissible chart point");
}

// Bounded-energy random phase points for long-horizon integration. The
// half-space model is sampled in its left-invariant momentum frame so the
// energy stays below ~0.75 and the exponential coordinate growth over
// duration 100 stays representable.
CotangentState random_start(const LagrangianSystem& sys, Rng& rng) {
  Vec x = sample_box(sys, rng);
  if (sys.kind == SystemKind::psl2r) {
    double u = rng.uniform(-0.7, 0.7);
    double w = rng.uniform(-0.7, 0.7);
    double pg = rng.uniform(0.3, 1.7);
    double y = x[1];
    return {{x}, {(u + pg) / y, w / y, pg}};
  }
  Vec v(sys.dim);
  for (int d = 0; d < sys.dim; ++d) v[d] = rng.uniform(-0.8, 0.8);
  return legendre_forward(sys, {{x}, v});
}

// 1 + 2: closed-orbit family actions and mean energies against closed forms
CriterionResult closed_orbit_family(int id, SystemKind kind, const std::vector<double>& ks,
                                    const AcceptanceConfig& cfg) {
  LagrangianSystem sys = make(kind);
  double worst_a = 0, worst_e = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    double k = ks[i];
    ReferenceOrbit ref = reference_orbit(sys, k);
    MinimizeConfig mc;
    mc.seed = subseed(cfg.seed, 0x100u + static_cast<std::uint64_t>(id), i);
    mc.threads = cfg.threads;
    MinimizeOutcome out = minimize_closed_loop(sys, ref.period, mc);
    double action_k = out.report.action + k * ref.period;
    worst_a = std::max(worst_a, std::abs(action_k - ref.action) / std::abs(ref.action));
    worst_e = std::max(worst_e, std::abs(out.report.energy_mean - k) / k);
  }
  bool pass = worst_a <= 0.02 && worst_e <= 0.02;
  return {id, sys.name + " closed-orbit actions", pass,
          strf("worst action rel err %.2e, worst energy rel err %.2e (tol 2.0e-02)", worst_a,
               worst_e)};
}

CriterionResult criterion_brackets(const AcceptanceConfig& cfg, std::optional<SystemKind> only) {
  bool pass = true;
  std::string detail;
  auto run = [&](SystemKind kind, double lo, double hi, double target) {
    LagrangianSystem sys = make(kind);
    CuConfig cc;
    cc.seed = subseed(cfg.seed, 0x103, static_cast<std::uint64_t>(kind));
    cc.threads = cfg.threads;
    CriticalValueEstimate est = estimate_cu(sys, lo, hi, cc);
    bool ok = est.conclusive_lower && est.upper - est.lower <= 0.04 && est.lower <= target &&
              target <= est.upper;
    pass = pass && ok;
    detail += strf("%s [%.5f, %.5f] target %.2f certified=%d; ", sys.name.c_str(), est.lower,
                   est.upper, target, est.conclusive_lower ? 1 : 0);
  };
  if (wants(only, SystemKind::heisenberg)) run(SystemKind::heisenberg, 0.3, 0.7, 0.5);
  if (wants(only, SystemKind::psl2r)) run(SystemKind::psl2r, 0.1, 0.4, 0.25);
  return {3, "critical-value brackets", pass, detail + "(width tol 0.04)"};
}

CriterionResult criterion_barrier_fits(const AcceptanceConfig& cfg,
                                       std::optional<SystemKind> only) {
  bool pass = true;
  std::string detail;
  auto run = [&](SystemKind kind, const Vec& x, double c, double a_ref,
                 std::optional<double> b_ref) {
    LagrangianSystem sys = make(kind);
    MinimizeConfig mc;
    mc.seed = subseed(cfg.seed, 0x104, static_cast<std::uint64_t>(kind));
    mc.threads = cfg.threads;
    BarrierProfile prof = barrier_profile(sys, {x}, {x}, c, {10, 20, 40, 80}, mc);
    AubryIndicator ai = aubry_indicator(prof);
    bool ok = prof.fit_ok && std::abs(prof.fit_a - a_ref) <= 0.05 * a_ref && !ai.aubry;
    detail += strf("%s a=%.4f (ref %.4f)", sys.name.c_str(), prof.fit_a, a_ref);
    if (b_ref) {
      ok = ok && std::abs(prof.fit_b - *b_ref) <= 0.25 * *b_ref;
      detail += strf(" b=%.3f (ref %.3f)", prof.fit_b, *b_ref);
    }
    detail += strf(" aubry=%d; ", ai.aubry ? 1 : 0);
    pass = pass && ok;
  };
  if (wants(only, SystemKind::heisenberg))
    run(SystemKind::heisenberg, Vec{0, 0, 0}, 0.5, 2 * M_PI, 2 * M_PI * M_PI);
  if (wants(only, SystemKind::psl2r)) run(SystemKind::psl2r, Vec{0, 1, 0}, 0.25, M_PI, std::nullopt);
  return {4, "diagonal barrier asymptotes", pass, detail + "(a tol 5%, b tol 25%)"};
}

CriterionResult criterion_vertical_orbit(const AcceptanceConfig&) {
  LagrangianSystem sys = make(SystemKind::heisenberg);
  VerticalCheck vc = vertical_orbit_check(sys, {{0.3, -0.2, 0.7}}, 5.0);
  bool pass = vc.el_residual < 1e-6 && std::abs(vc.action) < 1e-8;
  return {5, "nilpotent vertical orbit", pass,
          strf("el residual %.2e (tol 1e-06), |action| %.2e (tol 1e-08)", vc.el_residual,
               std::abs(vc.action))};
}

CriterionResult criterion_horocycle_constants(const AcceptanceConfig&) {
  LagrangianSystem sys = make(SystemKind::psl2r);
  IntegratorConfig ic;
  ic.record_stride = 5;
  double worst_e = 0, worst_pg = 0, worst_f = 0, worst_int = 0;
  for (int i = 0; i < 8; ++i) {
    double phi = 2 * M_PI * i / 8.0;
    HorocycleResult hr =
        horocycle_measure(sys, 0.5 * std::cos(phi), 0.5 * std::sin(phi), 20.0, ic);
    for (double e : hr.orbit.energy_log) worst_e = std::max(worst_e, std::abs(e - 0.25));
    for (const auto& [nm, log] : hr.orbit.integral_logs) {
      for (double v : log) {
        if (nm == "p_gamma") worst_pg = std::max(worst_pg, std::abs(v - 0.5));
        if (nm == "f") worst_f = std::max(worst_f, std::abs(v + 0.5));
      }
    }
    worst_int = std::max(worst_int, std::abs(measure_integral_L(sys, hr.sample) + 0.25));
  }
  bool pass = worst_e <= 1e-7 && worst_pg <= 1e-8 && worst_f <= 1e-7 && worst_int <= 1e-5;
  return {6, "horocycle invariants", pass,
          strf("energy gap %.2e, p_gamma gap %.2e, f gap %.2e, action gap %.2e", worst_e, worst_pg,
               worst_f, worst_int)};
}

CriterionResult criterion_graph_witness(const AcceptanceConfig&) {
  LagrangianSystem sys = make(SystemKind::psl2r);
  IntegratorConfig ic;
  ic.record_stride = 5;
  HorocycleResult ha = horocycle_measure(sys, 0.5, 0.0, 20.0, ic);
  HorocycleResult hb = horocycle_measure(sys, 0.0, 0.5, 20.0, ic);
  auto w = graph_union_witness(ha.sample, hb.sample, 1e-2);
  bool pass = w.has_value() && w->velocity_gap > 0.1 && w->base_dist < 1e-2;
  std::string detail = w ? strf("velocity gap %.4f at base distance %.2e (need > 0.1 within 1e-02)",
                                w->velocity_gap, w->base_dist)
                         : std::string("no atom pair within base tolerance");
  return {7, "non-graph union witness", pass, detail};
}

CriterionResult criterion_symplectic_identity(const AcceptanceConfig& cfg) {
  LagrangianSystem sys = make(SystemKind::heisenberg);
  std::vector<ExactSymplectomorphism> maps;
  maps.push_back(gaussian_fiber_translation(3, 0.7, {0.2, -0.1, 0.3}, 0.8));
  maps.push_back(translation_lift({0.4, -0.3, 0.25}));
  maps.push_back(dilation_lift({1.25, 0.8, 1.1}));

  double worst = 0;
  for (double k : {0.1, 0.2, 0.3, 0.375, 0.45}) {
    ReferenceOrbit ref = reference_orbit(sys, k);
    CotangentState st = reference_orbit_state(sys, k);
    IntegratorConfig ic;
    OrbitSegment seg = integrate(sys, st, ref.period, ic);
    for (const auto& m : maps)
      worst = std::max(worst, action_identity_residual(sys, m, seg, k));
  }

  CuConfig cc;
  cc.tol = 0.05;
  cc.T_grid.clear();
  for (int j = 0; j <= 5; ++j) cc.T_grid.push_back(2 * M_PI * std::pow(2.0, j));
  cc.seed = subseed(cfg.seed, 0x108);
  cc.threads = cfg.threads;
  CuInvarianceReport rep = cu_invariance_report(sys, maps[0], 0.3, 0.7, cc);

  bool pass = worst < 1e-4 && rep.overlap;
  return {8, "symplectic action identity", pass,
          strf("worst loop residual %.2e (tol 1e-04); brackets [%.4f,%.4f] vs mapped [%.4f,%.4f] "
               "overlap=%d",
               worst, rep.original.lower, rep.original.upper, rep.mapped.lower, rep.mapped.upper,
               rep.overlap ? 1 : 0)};
}

CriterionResult criterion_preorbit_identities(const AcceptanceConfig& cfg,
                                              std::optional<SystemKind> only) {
  LagrangianSystem heis = make(SystemKind::heisenberg);
  LagrangianSystem psl = make(SystemKind::psl2r);
  double worst_shift = 0, worst_excess = 0;
  int checked = 0;
  for (int i = 0; i < 50; ++i) {
    SystemKind kind = (i % 2 == 0) ? SystemKind::heisenberg : SystemKind::psl2r;
    if (!wants(only, kind)) continue;
    const LagrangianSystem& sys = kind == SystemKind::heisenberg ? heis : psl;
    Rng rng(cfg.seed, {0x109, static_cast<std::uint64_t>(i)});
    const ReferenceData& ref = *sys.reference;
    double k = ref.k_min + (ref.k_max - ref.k_min) * rng.uniform(0.25, 0.75);
    double period = ref.orbit_period(k);

    int nseg = 1 + static_cast<int>(rng.uniform() * 3);
    std::vector<OrbitSegment> segs;
    CotangentState cur = reference_orbit_state(sys, k);
    IntegratorConfig ic;
    ic.record_stride = 4;
    for (int s = 0; s < nseg; ++s) {
      segs.push_back(integrate(sys, cur, period * rng.uniform(0.3, 1.1), ic));
      cur = segs.back().back();
      if (s + 1 < nseg) {
        for (int d = 0; d < sys.dim; ++d) {
          cur.base.coords[d] += 0.03 * rng.uniform(-1, 1);
          cur.momentum[d] += 0.03 * rng.uniform(-1, 1);
        }
        if (kind == SystemKind::psl2r)
          cur.base.coords[1] = std::max(cur.base.coords[1], 0.05);
      }
    }
    PreOrbit y = make_preorbit(std::move(segs));
    double t = y.total_duration * rng.uniform(0.15, 0.85);
    worst_shift = std::max(worst_shift, shift_identity_residual(sys, y, k, t));
    EnergyDefect d = preorbit_energy_defect(sys, y);
    worst_excess = std::max(worst_excess, d.actual - d.bound);
    ++checked;
  }
  bool pass = worst_shift < 1e-6 && worst_excess <= 0;
  return {9, "pre-orbit identities", pass,
          strf("%d chains: worst shift residual %.2e (tol 1e-06), worst defect actual-bound %.2e "
               "(need <= 0)",
               checked, worst_shift, worst_excess)};
}

CriterionResult criterion_stationarity(const AcceptanceConfig& cfg,
                                       std::optional<SystemKind> only) {
  double worst = 0;
  for (SystemKind kind : {SystemKind::flat, SystemKind::heisenberg, SystemKind::psl2r,
                          SystemKind::open_plane}) {
    if (!wants(only, kind)) continue;
    LagrangianSystem sys = make(kind);
    for (int i = 0; i < 100; ++i) {
      Rng rng(cfg.seed, {0x10a, static_cast<std::uint64_t>(kind) * 1000 + i});
      HolonomicMeasureSample m;
      m.source = "random";
      double wsum = 0;
      for (int a = 0; a < 16; ++a) {
        Vec x = sample_box(sys, rng);
        Vec v(sys.dim);
        for (int d = 0; d < sys.dim; ++d) v[d] = rng.uniform(-2.0, 2.0);
        double w = rng.uniform(0.2, 1.0);
        m.atoms.push_back({{{x}, v}, w});
        wsum += w;
      }
      for (auto& atom : m.atoms) atom.weight /= wsum;
      worst = std::max(worst, stationarity_residual(sys, m).residual);
    }
  }
  double horo_gap = 0;
  if (wants(only, SystemKind::psl2r)) {
    LagrangianSystem sys = make(SystemKind::psl2r);
    IntegratorConfig ic;
    ic.record_stride = 5;
    HorocycleResult hr = horocycle_measure(sys, 0.5, 0.0, 20.0, ic);
    horo_gap = std::abs(measure_integral_E(sys, hr.sample) - 0.25);
  }
  bool pass = worst < 1e-6 && horo_gap <= 1e-6;
  return {10, "rescaling stationarity", pass,
          strf("worst residual %.2e (tol 1e-06), horocycle energy integral gap %.2e (tol 1e-06)",
               worst, horo_gap)};
}

CriterionResult criterion_unbounded_barrier(const AcceptanceConfig& cfg) {
  LagrangianSystem sys = make(SystemKind::open_plane);
  ChartPoint x{{0, 0}};
  std::vector<double> hs;
  for (double T : {10.0, 80.0, 640.0}) {
    MinimizeConfig mc;
    mc.seed = subseed(cfg.seed, 0x10b, static_cast<std::uint64_t>(T));
    mc.threads = cfg.threads;
    hs.push_back(finite_time_potential(sys, x, x, T, mc));
  }
  bool pass = hs[0] < hs[1] && hs[1] < hs[2] && hs[2] > 2 * hs[0];
  return {11, "unbounded diagonal barrier growth", pass,
          strf("h^10=%.4f h^80=%.4f h^640=%.4f (need strictly increasing, last > 2x first)",
               hs[0], hs[1], hs[2])};
}

CriterionResult criterion_hygiene(const AcceptanceConfig& cfg, std::optional<SystemKind> only) {
  double worst_rt = 0, worst_fen = 0, worst_drift = 0, worst_idrift = 0;
  bool pass = true;
  std::string detail;
  for (SystemKind kind : {SystemKind::flat, SystemKind::heisenberg, SystemKind::psl2r,
                          SystemKind::open_plane}) {
    if (!wants(only, kind)) continue;
    LagrangianSystem sys = make(kind);
    Rng rng(cfg.seed, {0x10c, static_cast<std::uint64_t>(kind)});
    for (int i = 0; i < 1000; ++i) {
      Vec x = sample_box(sys, rng);
      Vec v(sys.dim);
      for (int d = 0; d < sys.dim; ++d) v[d] = rng.uniform(-2.0, 2.0);
      TangentState ts{{x}, v};
      CotangentState ct = legendre_forward(sys, ts);
      TangentState back = legendre_inverse(sys, ct);
      CotangentState fwd = legendre_forward(sys, back);
      worst_rt = std::max(worst_rt, norm_inf(back.velocity - v));
      worst_rt = std::max(worst_rt, norm_inf(fwd.momentum - ct.momentum));
      worst_fen = std::max(worst_fen, fenchel_residual(sys, ts));
    }
    for (int i = 0; i < 10; ++i) {
      CotangentState start = random_start(sys, rng);
      IntegratorConfig ic;
      ic.record_stride = 1000;
      ic.max_energy_drift = 1e100;  // judged below against the criterion threshold
      OrbitSegment seg = integrate(sys, start, 100.0, ic);
      double rel = seg.max_energy_drift / std::max(1.0, std::abs(seg.energy_log.front()));
      worst_drift = std::max(worst_drift, rel);
      worst_idrift = std::max(worst_idrift, seg.max_integral_drift);
    }
  }
  pass = worst_rt < 1e-9 && worst_fen < 1e-9 && worst_drift < 1e-6 && worst_idrift < 1e-6;
  detail = strf("legendre round-trip %.2e (tol 1e-09), fenchel %.2e (tol 1e-09), energy drift "
                "%.2e, integral drift %.2e (tol 1e-06)",
                worst_rt, worst_fen, worst_drift, worst_idrift);
  return {12, "core numeric hygiene", pass, detail};
}

std::string criterion_name(int id) {
  switch (id) {
    case 1: return "heisenberg closed-orbit actions";
    case 2: return "psl2r closed-orbit actions";
    case 3: return "critical-value brackets";
    case 4: return "diagonal barrier asymptotes";
    case 5: return "nilpotent vertical orbit";
    case 6: return "horocycle invariants";
    case 7: return "non-graph union witness";
    case 8: return "symplectic action identity";
    case 9: return "pre-orbit identities";
    case 10: return "rescaling stationarity";
    case 11: return "unbounded diagonal barrier growth";
    case 12: return "core numeric hygiene";
    default: throw InputError("unknown criterion id");
  }
}

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceConfig& cfg,
                              std::optional<SystemKind> only) {
  CriterionResult r{id, criterion_name(id), false, ""};
  try {
    switch (id) {
      case 1:
        return closed_orbit_family(1, SystemKind::heisenberg, {0.1, 0.2, 0.3, 0.375, 0.45}, cfg);
      case 2:
        return closed_orbit_family(2, SystemKind::psl2r, {0.05, 0.125, 0.1875, 0.22}, cfg);
      case 3: return criterion_brackets(cfg, only);
      case 4: return criterion_barrier_fits(cfg, only);
      case 5: return criterion_vertical_orbit(cfg);
      case 6: return criterion_horocycle_constants(cfg);
      case 7: return criterion_graph_witness(cfg);
      case 8: return criterion_symplectic_identity(cfg);
      case 9: return criterion_preorbit_identities(cfg, only);
      case 10: return criterion_stationarity(cfg, only);
      case 11: return criterion_unbounded_barrier(cfg);
      case 12: return criterion_hygiene(cfg, only);
      default: throw InputError("unknown criterion id");
    }
  } catch (const std::exception& e) {
    r.detail = std::string("failed with: ") + e.what();
  }
  return r;
}

std::vector<int> criteria_for_system(SystemKind kind) {
  switch (kind) {
    case SystemKind::flat: return {10, 12};
    case SystemKind::heisenberg: return {1, 3, 4, 5, 8, 9, 10, 12};
    case SystemKind::psl2r: return {2, 3, 4, 6, 7, 9, 10, 12};
    case SystemKind::open_plane: return {10, 11, 12};
  }
  throw InputError("unknown system kind");
}

std::vector<CriterionResult> run_all_criteria(const AcceptanceConfig& cfg) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= 12; ++id) out.push_back(run_criterion(id, cfg));
  return out;
}

}  // namespace manelab
