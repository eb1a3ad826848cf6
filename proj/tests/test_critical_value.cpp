#include <cmath>

#include "doctest.h"
#include "manelab/critical_value.hpp"
#include "manelab/geometry.hpp"
#include "manelab/systems.hpp"

using namespace manelab;

namespace {

LagrangianSystem flat2() {
  SystemSpec spec;
  spec.kind = SystemKind::flat;
  return build_system(spec);
}

CuConfig cheap_cfg() {
  CuConfig cc;
  cc.T_grid = {4.0, 8.0};
  cc.tol = 0.05;
  cc.min_nodes = 64;
  cc.max_nodes = 96;
  cc.starts = 3;
  cc.max_iters = 6000;
  cc.seed = 77;
  return cc;
}

}  // namespace

TEST_CASE("default duration grid is dyadic") {
  std::vector<double> g = default_cu_T_grid();
  REQUIRE(g.size() == 8);
  CHECK(g.front() == doctest::Approx(2 * 3.14159265358979323846));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(2 * g[i - 1]));
}

TEST_CASE("free particle critical value brackets zero") {
  // For L = |v|^2/2 the loop action at level k is at least kT, with equality
  // on collapsed loops, so negative loops exist exactly below k = 0.
  LagrangianSystem sys = flat2();
  CriticalValueEstimate est = estimate_cu(sys, -0.1, 0.2, cheap_cfg());
  CHECK(est.conclusive_lower);
  CHECK(est.lower <= 0.0);
  CHECK(est.upper >= 0.0);
  CHECK(est.upper - est.lower <= 0.05 + 1e-12);
  REQUIRE_FALSE(est.witnesses.empty());
  for (const LoopWitness& w : est.witnesses) {
    CHECK(w.k < 0.0);
    CHECK(w.action < -est.epsilon);
  }
  // Sweep rows record the certification decision they reported.
  for (const SweepCell& c : est.sweeps)
    CHECK(c.certified == (c.loop_action < -est.epsilon));
}

TEST_CASE("bisection trace is deterministic for a fixed seed") {
  LagrangianSystem sys = flat2();
  CriticalValueEstimate a = estimate_cu(sys, -0.1, 0.2, cheap_cfg());
  CriticalValueEstimate b = estimate_cu(sys, -0.1, 0.2, cheap_cfg());
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
  REQUIRE(a.sweeps.size() == b.sweeps.size());
  for (std::size_t i = 0; i < a.sweeps.size(); ++i) {
    CHECK(a.sweeps[i].k == b.sweeps[i].k);
    CHECK(a.sweeps[i].T == b.sweeps[i].T);
    CHECK(a.sweeps[i].loop_action == b.sweeps[i].loop_action);
  }
}

TEST_CASE("an unreachable slack leaves the lower side inconclusive") {
  LagrangianSystem sys = flat2();
  CuConfig cc = cheap_cfg();
  cc.T_grid = {4.0};
  cc.tol = 0.2;
  cc.epsilon = 1e9;  // no loop can certify against this slack
  CriticalValueEstimate est = estimate_cu(sys, -0.1, 0.2, cc);
  CHECK_FALSE(est.conclusive_lower);
  CHECK(est.lower == doctest::Approx(-0.1));
  CHECK(est.witnesses.empty());
  CHECK(est.epsilon == doctest::Approx(1e9));
}

TEST_CASE("bracket validation") {
  LagrangianSystem sys = flat2();
  CuConfig cc = cheap_cfg();
  CHECK_THROWS_AS(estimate_cu(sys, 0.2, -0.1, cc), InputError);
  // The reference value 0 must sit strictly inside the bracket.
  CHECK_THROWS_AS(estimate_cu(sys, 0.05, 0.2, cc), InputError);
  CuConfig bad = cc;
  bad.tol = 0.0;
  CHECK_THROWS_AS(estimate_cu(sys, -0.1, 0.2, bad), InputError);
  CuConfig badgrid = cc;
  badgrid.T_grid = {-3.0, 4.0};
  CHECK_THROWS_AS(estimate_cu(sys, -0.1, 0.2, badgrid), InputError);
}

TEST_CASE("measure energy gap reports the distance to the prescribed level") {
  LagrangianSystem sys = flat2();
  HolonomicMeasureSample m;
  m.source = "test";
  // Two atoms with energies 0.125 and 0.5, weights 0.75 / 0.25.
  m.atoms.push_back({{{Vec{0.0, 0.0}}, Vec{0.5, 0.0}}, 0.75});
  m.atoms.push_back({{{Vec{1.0, 0.0}}, Vec{1.0, 0.0}}, 0.25});
  double mean = 0.75 * 0.125 + 0.25 * 0.5;
  CHECK(measure_energy_gap(sys, m, 0.25) == doctest::Approx(std::abs(mean - 0.25)).epsilon(1e-14));
  CHECK(measure_energy_gap(sys, m, mean) == doctest::Approx(0.0));
}
