#include <cmath>
#include <vector>

#include "doctest.h"
#include "manelab/flow.hpp"
#include "manelab/geometry.hpp"
#include "manelab/rng.hpp"
#include "manelab/systems.hpp"
#include "manelab/variational.hpp"

using namespace manelab;

namespace {

LagrangianSystem make(SystemKind kind) {
  SystemSpec spec;
  spec.kind = kind;
  return build_system(spec);
}

DiscretePath random_path(const LagrangianSystem& sys, double T, int m, bool closed,
                         std::uint64_t seed) {
  Rng rng(seed, {0x9a7ULL});
  DiscretePath p;
  p.duration = T;
  p.closed = closed;
  p.nodes.resize(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) {
    Vec x(sys.dim);
    for (int d = 0; d < sys.dim; ++d) x[d] = 0.4 * rng.uniform(-1.0, 1.0) + (sys.dim == 3 && d == 1 && sys.kind == SystemKind::psl2r ? 1.2 : 0.0);
    p.nodes[static_cast<std::size_t>(i)] = x;
  }
  if (closed) p.nodes.back() = p.nodes.front();
  return p;
}

}  // namespace

TEST_CASE("path action follows the trapezoid convention") {
  LagrangianSystem sys = make(SystemKind::heisenberg);
  DiscretePath p;
  p.duration = 1.0;
  p.nodes = {Vec{0.0, 0.0, 0.0}, Vec{0.2, -0.1, 0.3}, Vec{0.1, 0.4, 0.5}};
  double h = 0.5;
  double manual = 0.0;
  for (int i = 0; i < 2; ++i) {
    Vec v = node_velocity(p, i);
    manual += 0.5 * h * (sys.lagrangian(p.nodes[static_cast<std::size_t>(i)], v) +
                         sys.lagrangian(p.nodes[static_cast<std::size_t>(i) + 1], v));
  }
  CHECK(path_action(sys, p, 0.0) == doctest::Approx(manual).epsilon(1e-14));
  CHECK(path_action(sys, p, 0.3) == doctest::Approx(manual + 0.3).epsilon(1e-14));
  Vec v0 = node_velocity(p, 0);
  CHECK(v0[0] == doctest::Approx(0.4));
  CHECK(v0[2] == doctest::Approx(0.6));
}

TEST_CASE("action gradient matches finite differences") {
  for (SystemKind kind : {SystemKind::flat, SystemKind::heisenberg, SystemKind::psl2r}) {
    LagrangianSystem sys = make(kind);
    CAPTURE(sys.name);
    for (bool closed : {false, true}) {
      CAPTURE(closed);
      DiscretePath p = random_path(sys, 1.7, 9, closed, 11 + static_cast<int>(kind));
      std::vector<double> g = path_action_gradient(sys, p);
      int m = p.segments();
      int free_nodes = closed ? m : m + 1;
      REQUIRE(static_cast<int>(g.size()) >= free_nodes * sys.dim);
      double worst = 0;
      const double h = 1e-6;
      for (int i = 0; i < free_nodes; ++i) {
        for (int d = 0; d < sys.dim; ++d) {
          DiscretePath pp = p, pm = p;
          pp.nodes[static_cast<std::size_t>(i)][d] += h;
          pm.nodes[static_cast<std::size_t>(i)][d] -= h;
          if (closed && i == 0) {
            pp.nodes.back() = pp.nodes.front();
            pm.nodes.back() = pm.nodes.front();
          }
          double fd = (path_action(sys, pp, 0.0) - path_action(sys, pm, 0.0)) / (2 * h);
          worst = std::max(worst, std::abs(fd - g[static_cast<std::size_t>(i * sys.dim + d)]));
        }
      }
      CHECK(worst < 5e-6);
    }
  }
}

TEST_CASE("free particle minimizer is the straight segment") {
  LagrangianSystem sys = make(SystemKind::flat);
  MinimizeConfig mc;
  mc.min_nodes = 64;
  mc.max_nodes = 128;
  mc.starts = 3;
  mc.seed = 5;
  Vec D{1.2, -0.8};
  double T = 2.5;
  MinimizeOutcome mo = minimize_fixed_endpoints(sys, ChartPoint{Vec{0.0, 0.0}}, ChartPoint{D}, T, mc);
  double expect = 0.5 * dot(D, D) / T;
  CHECK(mo.report.converged);
  CHECK(mo.report.action == doctest::Approx(expect).epsilon(1e-8));
  CHECK(mo.report.grad_inf < mc.grad_tol);
  CHECK(el_residual(sys, mo.path) < 1e-8);
  // Kinetic energy of the straight segment: |D|^2 / (2 T^2).
  CHECK(mo.report.energy_mean == doctest::Approx(0.5 * dot(D, D) / (T * T)).epsilon(1e-6));
  Vec p0 = initial_covector(sys, mo.path);
  Vec p1 = final_covector(sys, mo.path);
  for (int d = 0; d < 2; ++d) {
    CHECK(p0[d] == doctest::Approx(D[d] / T).epsilon(1e-5));
    CHECK(p1[d] == doctest::Approx(D[d] / T).epsilon(1e-5));
  }
  CHECK(finite_time_potential(sys, ChartPoint{Vec{0.0, 0.0}}, ChartPoint{D}, T, mc) ==
        doctest::Approx(mo.report.action).epsilon(1e-12));
}

TEST_CASE("free closed loops collapse to points") {
  LagrangianSystem sys = make(SystemKind::flat);
  MinimizeConfig mc;
  mc.min_nodes = 64;
  mc.max_nodes = 96;
  mc.starts = 4;
  mc.seed = 9;
  MinimizeOutcome mo = minimize_closed_loop(sys, 3.0, mc);
  CHECK(mo.report.action >= 0.0);
  CHECK(mo.report.action < 1e-8);
  CHECK(mo.path.closed);
  CHECK(norm_inf(mo.path.nodes.back() - mo.path.nodes.front()) == doctest::Approx(0.0));
}

TEST_CASE("minimization is deterministic for a fixed seed") {
  LagrangianSystem sys = make(SystemKind::heisenberg);
  MinimizeConfig mc;
  mc.min_nodes = 64;
  mc.max_nodes = 96;
  mc.starts = 3;
  mc.max_iters = 4000;
  mc.seed = 1234;
  ChartPoint a{Vec{0.0, 0.0, 0.0}};
  ChartPoint b{Vec{0.4, 0.3, 0.2}};
  MinimizeOutcome r1 = minimize_fixed_endpoints(sys, a, b, 1.5, mc);
  MinimizeOutcome r2 = minimize_fixed_endpoints(sys, a, b, 1.5, mc);
  CHECK(r1.report.action == r2.report.action);
  CHECK(r1.report.start_index == r2.report.start_index);
  CHECK(r1.report.iterations == r2.report.iterations);
  REQUIRE(r1.path.nodes.size() == r2.path.nodes.size());
  double gap = 0;
  for (std::size_t i = 0; i < r1.path.nodes.size(); ++i)
    gap = std::max(gap, norm_inf(r1.path.nodes[i] - r2.path.nodes[i]));
  CHECK(gap == doctest::Approx(0.0));
}

TEST_CASE("endpoints are pinned and short minimizers are near stationary") {
  LagrangianSystem sys = make(SystemKind::psl2r);
  MinimizeConfig mc;
  mc.min_nodes = 160;  // EL residual is h^2-limited; a finer grid keeps it well below 1e-4
  mc.max_nodes = 200;
  mc.starts = 3;
  mc.seed = 21;
  ChartPoint a{Vec{0.0, 1.0, 0.0}};
  ChartPoint b{Vec{0.3, 1.4, 0.2}};
  MinimizeOutcome mo = minimize_fixed_endpoints(sys, a, b, 1.2, mc);
  CHECK(norm_inf(mo.path.nodes.front() - a.coords) == doctest::Approx(0.0));
  CHECK(norm_inf(mo.path.nodes.back() - b.coords) == doctest::Approx(0.0));
  CHECK(mo.report.converged);
  CHECK(el_residual(sys, mo.path) < 1e-4);
  // Every interior node stays in the chart.
  for (const Vec& x : mo.path.nodes) CHECK(x[1] > 0);
}

TEST_CASE("node budget clamps to the configured window") {
  LagrangianSystem sys = make(SystemKind::flat);
  MinimizeConfig mc;
  mc.nodes_per_unit_time = 10;
  mc.min_nodes = 64;
  mc.max_nodes = 80;
  mc.starts = 2;
  mc.seed = 3;
  MinimizeOutcome lo = minimize_fixed_endpoints(sys, ChartPoint{Vec{0.0, 0.0}},
                                                ChartPoint{Vec{1.0, 0.0}}, 0.5, mc);
  CHECK(lo.report.nodes == 64);
  MinimizeOutcome hi = minimize_fixed_endpoints(sys, ChartPoint{Vec{0.0, 0.0}},
                                                ChartPoint{Vec{1.0, 0.0}}, 50.0, mc);
  CHECK(hi.report.nodes == 80);
}

TEST_CASE("invalid minimization inputs are rejected") {
  LagrangianSystem sys = make(SystemKind::flat);
  MinimizeConfig mc;
  CHECK_THROWS_AS(
      minimize_fixed_endpoints(sys, ChartPoint{Vec{0.0, 0.0}}, ChartPoint{Vec{1.0, 0.0}}, -1.0, mc),
      InputError);
  CHECK_THROWS_AS(minimize_closed_loop(sys, 0.0, mc), InputError);
}
