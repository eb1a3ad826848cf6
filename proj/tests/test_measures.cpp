#include <cmath>

#include "doctest.h"
#include "manelab/critical_value.hpp"
#include "manelab/flow.hpp"
#include "manelab/geometry.hpp"
#include "manelab/measures.hpp"
#include "manelab/systems.hpp"
#include "manelab/variational.hpp"

using namespace manelab;

namespace {

LagrangianSystem make(SystemKind kind) {
  SystemSpec spec;
  spec.kind = kind;
  return build_system(spec);
}

DiscretePath square_loop(double T) {
  // Piecewise-linear closed loop through four corners, 8 nodes per side.
  DiscretePath p;
  p.duration = T;
  p.closed = true;
  const Vec corners[4] = {Vec{0.0, 0.0}, Vec{1.0, 0.0}, Vec{1.0, 1.0}, Vec{0.0, 1.0}};
  for (int side = 0; side < 4; ++side) {
    const Vec& a = corners[side];
    const Vec& b = corners[(side + 1) % 4];
    for (int i = 0; i < 8; ++i) {
      double s = i / 8.0;
      p.nodes.push_back(a + s * (b - a));
    }
  }
  p.nodes.push_back(p.nodes.front());
  return p;
}

}  // namespace

TEST_CASE("path samples reproduce discrete time averages") {
  LagrangianSystem sys = make(SystemKind::flat);
  DiscretePath p = square_loop(4.0);
  HolonomicMeasureSample m = sample_from_path(sys, p);
  CHECK(m.atoms.size() == 32);
  double wsum = 0;
  for (const MeasureAtom& a : m.atoms) wsum += a.weight;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
  // Every side is traversed at unit speed (perimeter 4 over T = 4), so the
  // kinetic integrand is 1/2 at each atom.
  CHECK(measure_integral_L(sys, m) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(measure_integral_E(sys, m) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("velocity rescaling acts quadratically on free kinetic integrals") {
  LagrangianSystem sys = make(SystemKind::flat);
  HolonomicMeasureSample m = sample_from_path(sys, square_loop(4.0));
  for (double lam : {0.5, 1.3, 2.0}) {
    HolonomicMeasureSample r = rescale_measure(m, lam);
    CHECK(measure_integral_L(sys, r) == doctest::Approx(0.5 * lam * lam).epsilon(1e-12));
  }
  CHECK(rescale_measure(m, 2.0).source == m.source + ":rescaled");
}

TEST_CASE("rescaling stationarity identity holds on closed-loop samples") {
  for (SystemKind kind : {SystemKind::flat, SystemKind::heisenberg, SystemKind::psl2r}) {
    LagrangianSystem sys = make(kind);
    CAPTURE(sys.name);
    DiscretePath p;
    p.duration = 3.0;
    p.closed = true;
    const int m = 48;
    for (int i = 0; i <= m; ++i) {
      double th = 2 * M_PI * i / m;
      Vec x(sys.dim);
      x[0] = 0.4 * std::cos(th);
      x[1] = (kind == SystemKind::psl2r ? 1.3 : 0.0) + 0.4 * std::sin(th);
      if (sys.dim == 3) x[2] = 0.1 * std::sin(2 * th);
      p.nodes.push_back(x);
    }
    p.nodes.back() = p.nodes.front();
    HolonomicMeasureSample sample = sample_from_path(sys, p);
    StationarityCheck sc = stationarity_residual(sys, sample);
    // Centered difference at fd_step 1e-4 carries O(1e-8) truncation.
    CHECK(sc.residual < 1e-6);
    CHECK(sc.identity_value ==
          doctest::Approx(measure_integral_E(sys, sample) + measure_integral_L(sys, sample))
              .epsilon(1e-12));
  }
}

TEST_CASE("orbit samples integrate invariant quantities consistently") {
  LagrangianSystem sys = make(SystemKind::heisenberg);
  CotangentState start = reference_orbit_state(sys, 0.25);
  double T = reference_orbit(sys, 0.25).period;
  IntegratorConfig ic;
  ic.record_stride = 5;
  OrbitSegment seg = integrate(sys, start, T, ic);
  HolonomicMeasureSample m = sample_from_segment(sys, seg);
  double wsum = 0;
  for (const MeasureAtom& a : m.atoms) wsum += a.weight;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
  // The closed orbit lives on H = k, so the sampled energy integral equals k.
  CHECK(measure_integral_E(sys, m) == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(measure_energy_gap(sys, m, 0.25) < 1e-8);
}

TEST_CASE("distinguished half-space orbit has pointwise lagrangian minus a quarter") {
  LagrangianSystem sys = make(SystemKind::psl2r);
  IntegratorConfig ic;
  ic.record_stride = 5;
  HorocycleResult hr = horocycle_measure(sys, 0.5, 0.0, 20.0, ic);
  CHECK(hr.sample.source == "psl2r:horocycle");
  CHECK(hr.orbit.max_integral_drift < 1e-8);
  // L = -1/4 along the whole family, so the integral needs no averaging time.
  CHECK(measure_integral_L(sys, hr.sample) == doctest::Approx(-0.25).epsilon(1e-9));
  CHECK(measure_integral_E(sys, hr.sample) == doctest::Approx(0.25).epsilon(1e-9));
  StationarityCheck sc = stationarity_residual(sys, hr.sample);
  CHECK(sc.residual < 1e-6);
  // A shorter sample gives the same integral: the value is pointwise.
  HorocycleResult hs = horocycle_measure(sys, 0.5, 0.0, 2.0, ic);
  CHECK(measure_integral_L(sys, hs.sample) == doctest::Approx(-0.25).epsilon(1e-9));

  CHECK_THROWS_AS(horocycle_measure(make(SystemKind::flat), 0.5, 0.0, 5.0, ic), InputError);
  CHECK_THROWS_AS(horocycle_measure(sys, 0.5, 0.0, -1.0, ic), InputError);
}

TEST_CASE("two distinguished orbits witness a non-graph union") {
  LagrangianSystem sys = make(SystemKind::psl2r);
  IntegratorConfig ic;
  ic.record_stride = 5;
  HorocycleResult a = horocycle_measure(sys, 0.5, 0.0, 20.0, ic);
  HorocycleResult b = horocycle_measure(sys, 0.0, 0.5, 20.0, ic);
  auto w = graph_union_witness(a.sample, b.sample, 1e-2);
  REQUIRE(w.has_value());
  CHECK(w->base_dist <= 1e-2);
  // Both orbits pass through the shared start point with distinct velocities.
  CHECK(w->velocity_gap > 0.5);
  CHECK(w->velocity_gap < 1.5);
}

TEST_CASE("distant supports yield no graph witness") {
  LagrangianSystem sys = make(SystemKind::flat);
  DiscretePath p1;
  p1.duration = 1.0;
  p1.nodes = {Vec{0.0, 0.0}, Vec{0.1, 0.0}, Vec{0.2, 0.0}};
  DiscretePath p2;
  p2.duration = 1.0;
  p2.nodes = {Vec{5.0, 5.0}, Vec{5.1, 5.0}, Vec{5.2, 5.0}};
  auto w = graph_union_witness(sample_from_path(sys, p1), sample_from_path(sys, p2), 0.5);
  CHECK_FALSE(w.has_value());
}
