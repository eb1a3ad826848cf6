#include <cmath>

#include "doctest.h"
#include "manelab/geometry.hpp"
#include "manelab/systems.hpp"

using namespace manelab;

namespace {

LagrangianSystem make(SystemKind kind) {
  SystemSpec spec;
  spec.kind = kind;
  return build_system(spec);
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("system kind names round trip") {
  for (const char* nm : {"flat", "heisenberg", "psl2r", "open_plane"}) {
    SystemKind k = parse_system_kind(nm);
    CHECK(system_kind_name(k) == nm);
  }
  CHECK_THROWS_AS(parse_system_kind("torus"), InputError);
  CHECK_THROWS_AS(parse_system_kind(""), InputError);
}

TEST_CASE("reference constants of the model systems") {
  LagrangianSystem heis = make(SystemKind::heisenberg);
  REQUIRE(heis.reference.has_value());
  CHECK(heis.reference->cu == doctest::Approx(0.5));
  CHECK(heis.reference->c_abelian.value() == doctest::Approx(0.5));
  CHECK(heis.reference->barrier_diag.value() == doctest::Approx(2 * kPi));
  CHECK(heis.reference->k_max == doctest::Approx(0.5));

  LagrangianSystem psl = make(SystemKind::psl2r);
  REQUIRE(psl.reference.has_value());
  CHECK(psl.reference->cu == doctest::Approx(0.25));
  CHECK(psl.reference->c_abelian.value() == doctest::Approx(0.5));
  CHECK(psl.reference->barrier_diag.value() == doctest::Approx(kPi));
  CHECK(psl.reference->k_max == doctest::Approx(0.25));

  LagrangianSystem flat = make(SystemKind::flat);
  REQUIRE(flat.reference.has_value());
  CHECK(flat.reference->cu == doctest::Approx(0.0));
  CHECK(flat.reference->barrier_diag.value() == doctest::Approx(0.0));
  CHECK_FALSE(flat.has_closed_orbit_states);
}

TEST_CASE("closed orbit family closed forms at exact anchor levels") {
  // Both families have algebraic values where the inner square root is 1/2.
  LagrangianSystem heis = make(SystemKind::heisenberg);
  ReferenceOrbit h = reference_orbit(heis, 0.375);
  CHECK(h.period == doctest::Approx(4 * kPi).epsilon(1e-12));
  CHECK(h.action == doctest::Approx(kPi).epsilon(1e-12));

  LagrangianSystem psl = make(SystemKind::psl2r);
  ReferenceOrbit p = reference_orbit(psl, 0.1875);
  CHECK(p.period == doctest::Approx(4 * kPi).epsilon(1e-12));
  CHECK(p.action == doctest::Approx(0.5 * kPi).epsilon(1e-12));

  CHECK_THROWS_AS(reference_orbit(heis, 0.0), InputError);
  CHECK_THROWS_AS(reference_orbit(heis, 0.5), InputError);
  CHECK_THROWS_AS(reference_orbit(psl, 0.3), InputError);
  CHECK_THROWS_AS(reference_orbit(make(SystemKind::flat), 0.1), InputError);
}

TEST_CASE("orbit family actions shrink to zero at the bottom of the range") {
  LagrangianSystem heis = make(SystemKind::heisenberg);
  CHECK(reference_orbit(heis, 1e-6).action < 1e-4);
  LagrangianSystem psl = make(SystemKind::psl2r);
  CHECK(reference_orbit(psl, 1e-6).action < 1e-4);
}

TEST_CASE("period inversion returns a consistent family member") {
  for (SystemKind kind : {SystemKind::heisenberg, SystemKind::psl2r}) {
    LagrangianSystem sys = make(kind);
    CAPTURE(sys.name);
    for (double T : {7.0, 10.0, 40.0}) {
      PeriodOrbit po = reference_orbit_with_period(sys, T);
      CHECK(po.k > sys.reference->k_min);
      CHECK(po.k < sys.reference->k_max);
      ReferenceOrbit ro = reference_orbit(sys, po.k);
      CHECK(ro.period == doctest::Approx(T).epsilon(1e-10));
      CHECK(ro.action == doctest::Approx(po.action).epsilon(1e-12));
    }
    CHECK_THROWS_AS(reference_orbit_with_period(sys, 2 * kPi), InputError);
  }
}

TEST_CASE("vertical curves of the nilpotent model are stationary with zero shifted action") {
  LagrangianSystem heis = make(SystemKind::heisenberg);
  VerticalCheck vc = vertical_orbit_check(heis, ChartPoint{Vec{0.3, -0.2, 0.7}}, 5.0);
  CHECK(vc.el_residual < 1e-6);
  CHECK(std::abs(vc.action) < 1e-8);
  // The family exists through every base point.
  VerticalCheck vc2 = vertical_orbit_check(heis, ChartPoint{Vec{-1.1, 0.4, 0.0}}, 3.0);
  CHECK(vc2.el_residual < 1e-6);
  CHECK(std::abs(vc2.action) < 1e-8);
  CHECK_THROWS_AS(vertical_orbit_check(make(SystemKind::flat), ChartPoint{Vec{0.0, 0.0}}, 1.0),
                  InputError);
}

TEST_CASE("distinguished half-space states carry the exact invariants") {
  LagrangianSystem psl = make(SystemKind::psl2r);
  CotangentState s = psl2r_horocycle_state(0.5, 0.0);
  Vec m = psl2r_left_invariant_momenta(s);
  CHECK(m[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(psl.hamiltonian(s.base.coords, s.momentum) == doctest::Approx(0.25).epsilon(1e-12));

  CotangentState s2 = psl2r_horocycle_state(0.0, 0.5);
  CHECK(psl.hamiltonian(s2.base.coords, s2.momentum) == doctest::Approx(0.25).epsilon(1e-12));

  CHECK_THROWS_AS(psl2r_horocycle_state(0.3, 0.0), InputError);
}

TEST_CASE("open plane potential matches the plateau and tail pieces") {
  LagrangianSystem sys = make(SystemKind::open_plane);
  CHECK(open_plane_potential(sys, 0.0) == doctest::Approx(2.0));
  CHECK(open_plane_potential(sys, 1.0) == doctest::Approx(2.0));
  CHECK(open_plane_potential(sys, 2.0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(open_plane_potential(sys, 3.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // C^1 junction at the outer radius.
  double h = 1e-5;
  double left = (open_plane_potential(sys, 2.0) - open_plane_potential(sys, 2.0 - h)) / h;
  double right = (open_plane_potential(sys, 2.0 + h) - open_plane_potential(sys, 2.0)) / h;
  CHECK(left == doctest::Approx(-0.25).epsilon(1e-3));
  CHECK(right == doctest::Approx(-0.25).epsilon(1e-3));

  SystemSpec spec;
  spec.kind = SystemKind::open_plane;
  spec.params["r_inner"] = 0.5;
  spec.params["r_outer"] = 1.5;
  spec.params["plateau"] = 3.0;
  LagrangianSystem sys2 = build_system(spec);
  CHECK(open_plane_potential(sys2, 0.25) == doctest::Approx(3.0));
  CHECK(open_plane_potential(sys2, 1.5) == doctest::Approx(1.0 / 1.5).epsilon(1e-10));

  SystemSpec bad;
  bad.kind = SystemKind::open_plane;
  bad.params["r_inner"] = 2.0;
  bad.params["r_outer"] = 1.0;
  CHECK_THROWS_AS(build_system(bad), InputError);
}

TEST_CASE("flat dimension parameter is validated") {
  SystemSpec spec;
  spec.kind = SystemKind::flat;
  spec.params["dim"] = 3;
  LagrangianSystem sys = build_system(spec);
  CHECK(sys.dim == 3);
  CHECK(sys.first_integrals.size() == 3);
  spec.params["dim"] = Vec::kMaxDim + 1;
  CHECK_THROWS_AS(build_system(spec), InputError);
  spec.params["dim"] = 0;
  CHECK_THROWS_AS(build_system(spec), InputError);
}
