#include <cmath>

#include "doctest.h"
#include "manelab/flow.hpp"
#include "manelab/geometry.hpp"
#include "manelab/systems.hpp"

using namespace manelab;

namespace {

LagrangianSystem make(SystemKind kind) {
  SystemSpec spec;
  spec.kind = kind;
  return build_system(spec);
}

}  // namespace

TEST_CASE("free flow is reproduced exactly") {
  LagrangianSystem sys = make(SystemKind::flat);
  CotangentState start{{Vec{0.1, -0.2}}, Vec{0.7, 0.3}};
  IntegratorConfig ic;
  ic.record_stride = 50;
  OrbitSegment seg = integrate(sys, start, 2.0, ic);
  CHECK(seg.back().base.coords[0] == doctest::Approx(0.1 + 0.7 * 2.0).epsilon(1e-12));
  CHECK(seg.back().base.coords[1] == doctest::Approx(-0.2 + 0.3 * 2.0).epsilon(1e-12));
  CHECK(norm_inf(seg.back().momentum - start.momentum) < 1e-14);
  CHECK(seg.max_energy_drift < 1e-13);
  CHECK_FALSE(seg.drift_warning);
  CHECK(seg.times.front() == doctest::Approx(0.0));
  CHECK(seg.times.back() == doctest::Approx(2.0));
  // Action of the free orbit: (|p|^2 / 2) T at k = 0.
  double expect = 0.5 * dot(start.momentum, start.momentum) * 2.0;
  CHECK(orbit_action(sys, seg, 0.0) == doctest::Approx(expect).epsilon(1e-10));
  CHECK(orbit_action(sys, seg, 0.25) == doctest::Approx(expect + 0.25 * 2.0).epsilon(1e-10));
}

TEST_CASE("closed reference orbits close under the flow with matching action") {
  struct Case {
    SystemKind kind;
    double k;
  };
  const Case cases[] = {{SystemKind::heisenberg, 0.25},
                        {SystemKind::heisenberg, 0.375},
                        {SystemKind::psl2r, 0.125},
                        {SystemKind::psl2r, 0.1875}};
  for (const Case& c : cases) {
    LagrangianSystem sys = make(c.kind);
    CAPTURE(sys.name);
    CAPTURE(c.k);
    ReferenceOrbit ro = reference_orbit(sys, c.k);
    CotangentState start = reference_orbit_state(sys, c.k);
    IntegratorConfig ic;
    ic.record_stride = 20;
    OrbitSegment seg = integrate(sys, start, ro.period, ic);
    CHECK(phase_dist(seg.back(), start) < 1e-7);
    CHECK(orbit_action(sys, seg, c.k) == doctest::Approx(ro.action).epsilon(1e-6));
    CHECK(seg.max_energy_drift < 1e-9);
    CHECK(seg.max_integral_drift < 1e-9);
  }
}

TEST_CASE("energy level of the closed orbit family equals its parameter") {
  // The family at level k lives on H = k; the integrator's energy log starts there.
  for (double k : {0.1, 0.3, 0.45}) {
    LagrangianSystem sys = make(SystemKind::heisenberg);
    CotangentState s = reference_orbit_state(sys, k);
    CHECK(sys.hamiltonian(s.base.coords, s.momentum) == doctest::Approx(k).epsilon(1e-12));
  }
  for (double k : {0.05, 0.2}) {
    LagrangianSystem sys = make(SystemKind::psl2r);
    CotangentState s = reference_orbit_state(sys, k);
    CHECK(sys.hamiltonian(s.base.coords, s.momentum) == doctest::Approx(k).epsilon(1e-12));
  }
}

TEST_CASE("integration schemes agree and reverse cleanly") {
  LagrangianSystem sys = make(SystemKind::heisenberg);
  CotangentState start = reference_orbit_state(sys, 0.2);
  IntegratorConfig rk;
  rk.record_stride = 1000;
  IntegratorConfig im = rk;
  im.scheme = Scheme::implicit_midpoint;
  im.max_energy_drift = 1e-4;  // midpoint keeps energy to O(h^2)
  OrbitSegment a = integrate(sys, start, 3.0, rk);
  OrbitSegment b = integrate(sys, start, 3.0, im);
  CHECK(phase_dist(a.back(), b.back()) < 1e-5);
  CHECK(time_reversal_gap(sys, start, 3.0, rk) < 1e-8);
  CHECK(time_reversal_gap(sys, start, 3.0, im) < 1e-8);
}

TEST_CASE("recording stride keeps the grid aligned and the endpoint exact") {
  LagrangianSystem sys = make(SystemKind::heisenberg);
  CotangentState start = reference_orbit_state(sys, 0.3);
  IntegratorConfig ic;
  ic.step = 1e-3;
  ic.record_stride = 7;
  OrbitSegment seg = integrate(sys, start, 1.0, ic);
  // 1000 steps: records at 0, 7h, 14h, ..., plus the final step.
  CHECK(seg.times.size() == seg.states.size());
  CHECK(seg.energy_log.size() == seg.states.size());
  for (const auto& [nm, lg] : seg.integral_logs) {
    CAPTURE(nm);
    CHECK(lg.size() == seg.states.size());
  }
  CHECK(seg.times.back() == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 1; i + 1 < seg.times.size(); ++i)
    CHECK(seg.times[i] - seg.times[i - 1] == doctest::Approx(7e-3).epsilon(1e-9));
}

TEST_CASE("declared first integrals are conserved along orbits") {
  LagrangianSystem heis = make(SystemKind::heisenberg);
  CotangentState s{{Vec{0.2, -0.1, 0.4}}, Vec{0.3, 0.1, 0.8}};
  OrbitSegment seg = integrate(heis, s, 4.0, IntegratorConfig{});
  CHECK(seg.max_integral_drift < 1e-10);

  LagrangianSystem psl = make(SystemKind::psl2r);
  CotangentState s2{{Vec{0.0, 1.0, 0.0}}, Vec{0.6, 0.2, 0.7}};
  OrbitSegment seg2 = integrate(psl, s2, 4.0, IntegratorConfig{});
  CHECK(seg2.max_integral_drift < 1e-10);
  REQUIRE(seg2.integral_logs.size() == 2);
  CHECK(seg2.integral_logs[0].first == "p_gamma");
}

TEST_CASE("orbit action is additive under slicing") {
  LagrangianSystem sys = make(SystemKind::psl2r);
  CotangentState start = reference_orbit_state(sys, 0.15);
  IntegratorConfig ic;
  ic.record_stride = 10;
  OrbitSegment seg = integrate(sys, start, 5.0, ic);
  int n = static_cast<int>(seg.states.size());
  REQUIRE(n > 10);
  int cut = n / 3;
  OrbitSegment head = slice_segment(seg, 0, cut);
  OrbitSegment tail = slice_segment(seg, cut, n - 1);
  double k = 0.2;
  double whole = orbit_action(sys, seg, k);
  double split = orbit_action(sys, head, k) + orbit_action(sys, tail, k);
  CHECK(whole == doctest::Approx(split).epsilon(1e-12));
  CHECK(head.back().base.coords[1] == doctest::Approx(tail.front().base.coords[1]));
}

TEST_CASE("leaving the chart raises a numerical error") {
  LagrangianSystem psl = make(SystemKind::psl2r);
  CotangentState bad{{Vec{0.0, -1.0, 0.0}}, Vec{0.0, 0.0, 0.0}};
  CHECK_THROWS_AS(integrate(psl, bad, 1.0, IntegratorConfig{}), NumericalError);
}

TEST_CASE("blow up of a custom field is caught as non-finite state") {
  // dx/dt = x^2 from x = 1 leaves every bound before t = 2.
  LagrangianSystem sys;
  sys.name = "blowup";
  sys.dim = 1;
  sys.lagrangian = [](const Vec&, const Vec&) { return 0.0; };
  sys.dLdv = [](const Vec&, const Vec&) { return Vec{0.0}; };
  sys.dLdx = [](const Vec&, const Vec&) { return Vec{0.0}; };
  sys.hamiltonian = [](const Vec&, const Vec&) { return 0.0; };
  sys.ham_vector_field = [](const Vec& x, const Vec&, Vec& dx, Vec& dp) {
    dx = Vec{x[0] * x[0]};
    dp = Vec{0.0};
  };
  sys.chart_ok = [](const Vec& x) { return all_finite(x); };
  sys.sample_lo = Vec{-1.0};
  sys.sample_hi = Vec{1.0};
  IntegratorConfig ic;
  ic.max_energy_drift = 1e100;
  CHECK_THROWS_AS(integrate(sys, CotangentState{{Vec{1.0}}, Vec{0.0}}, 2.0, ic), NumericalError);
}

TEST_CASE("negative duration integrates backward") {
  LagrangianSystem sys = make(SystemKind::heisenberg);
  CotangentState start = reference_orbit_state(sys, 0.25);
  IntegratorConfig ic;
  ic.record_stride = 100;
  OrbitSegment fwd = integrate(sys, start, 1.5, ic);
  OrbitSegment back = integrate(sys, fwd.back(), -1.5, ic);
  CHECK(phase_dist(back.back(), start) < 1e-9);
  CHECK(back.times.back() < back.times.front());
}

TEST_CASE("drift warning flags a too-coarse step without aborting") {
  LagrangianSystem sys = make(SystemKind::psl2r);
  CotangentState start = reference_orbit_state(sys, 0.2);
  IntegratorConfig ic;
  ic.step = 0.25;  // deliberately coarse
  ic.max_energy_drift = 1e-14;
  OrbitSegment seg = integrate(sys, start, 5.0, ic);
  CHECK(seg.drift_warning);
  CHECK(seg.states.size() > 1);
}
