#include "manelab/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "manelab/optim.hpp"
#include "manelab/rng.hpp"

namespace manelab {

Vec node_velocity(const DiscretePath& path, int i) {
  double h = path.step();
  return (1.0 / h) * (path.nodes[static_cast<std::size_t>(i) + 1] -
                      path.nodes[static_cast<std::size_t>(i)]);
}

double path_action(const LagrangianSystem& sys, const DiscretePath& path, double k) {
  const int m = path.segments();
  if (m < 1) throw InputError("path_action: empty path");
  const double h = path.step();
  double a = 0;
  for (int i = 0; i < m; ++i) {
    const Vec& x0 = path.nodes[static_cast<std::size_t>(i)];
    const Vec& x1 = path.nodes[static_cast<std::size_t>(i) + 1];
    Vec v = (1.0 / h) * (x1 - x0);
    a += 0.5 * h * (sys.lagrangian(x0, v) + sys.lagrangian(x1, v));
  }
  return a + k * path.duration;
}

std::vector<double> path_action_gradient(const LagrangianSystem& sys, const DiscretePath& path) {
  const int m = path.segments();
  const int dim = sys.dim;
  const double h = path.step();
  const int n_nodes = path.closed ? m : m + 1;
  std::vector<double> grad(static_cast<std::size_t>(n_nodes * dim), 0.0);
  auto add = [&](int node, const Vec& contrib) {
    int j = path.closed ? node % m : node;
    for (int d = 0; d < dim; ++d) grad[static_cast<std::size_t>(j * dim + d)] += contrib[d];
  };
  for (int i = 0; i < m; ++i) {
    const Vec& x0 = path.nodes[static_cast<std::size_t>(i)];
    const Vec& x1 = path.nodes[static_cast<std::size_t>(i) + 1];
    Vec v = (1.0 / h) * (x1 - x0);
    Vec pv = sys.dLdv(x0, v) + sys.dLdv(x1, v);
    Vec g0 = (0.5 * h) * sys.dLdx(x0, v) - 0.5 * pv;
    Vec g1 = (0.5 * h) * sys.dLdx(x1, v) + 0.5 * pv;
    add(i, g0);
    add(i + 1, g1);
  }
  return grad;
}

Vec initial_covector(const LagrangianSystem& sys, const DiscretePath& path) {
  const double h = path.step();
  const Vec& x0 = path.nodes[0];
  const Vec& x1 = path.nodes[1];
  Vec v0 = (1.0 / h) * (x1 - x0);
  return 0.5 * (sys.dLdv(x0, v0) + sys.dLdv(x1, v0)) - (0.5 * h) * sys.dLdx(x0, v0);
}

Vec final_covector(const LagrangianSystem& sys, const DiscretePath& path) {
  const int m = path.segments();
  const double h = path.step();
  const Vec& xa = path.nodes[static_cast<std::size_t>(m) - 1];
  const Vec& xb = path.nodes[static_cast<std::size_t>(m)];
  Vec v = (1.0 / h) * (xb - xa);
  return 0.5 * (sys.dLdv(xa, v) + sys.dLdv(xb, v)) + (0.5 * h) * sys.dLdx(xb, v);
}

double path_mean_energy(const LagrangianSystem& sys, const DiscretePath& path) {
  const int m = path.segments();
  double s = 0;
  for (int i = 0; i < m; ++i) {
    TangentState ts{{path.nodes[static_cast<std::size_t>(i)]}, node_velocity(path, i)};
    s += energy(sys, ts);
  }
  return s / m;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int pick_nodes(double T, const MinimizeConfig& cfg) {
  double want = cfg.nodes_per_unit_time * T;
  int m = static_cast<int>(std::lround(std::clamp(
      want, static_cast<double>(cfg.min_nodes), static_cast<double>(cfg.max_nodes))));
  return std::max(8, m);
}

// Packs path nodes into the optimizer vector and back. For closed paths the
// free block is nodes 0..m-1; for open paths nodes 1..m-1.
struct PathProblem {
  const LagrangianSystem* sys;
  double T;
  bool closed;
  int m, dim;
  Vec fixed0, fixed1;  // endpoints when open

  int free_nodes() const { return closed ? m : m - 1; }

  void unpack(const std::vector<double>& z, DiscretePath& path) const {
    path.duration = T;
    path.closed = closed;
    path.nodes.resize(static_cast<std::size_t>(m) + 1);
    int off = closed ? 0 : 1;
    for (int i = 0; i < free_nodes(); ++i) {
      Vec x(dim);
      for (int d = 0; d < dim; ++d) x[d] = z[static_cast<std::size_t>(i * dim + d)];
      path.nodes[static_cast<std::size_t>(i + off)] = x;
    }
    if (closed) {
      path.nodes[static_cast<std::size_t>(m)] = path.nodes[0];
    } else {
      path.nodes[0] = fixed0;
      path.nodes[static_cast<std::size_t>(m)] = fixed1;
    }
  }

  std::vector<double> pack(const DiscretePath& path) const {
    std::vector<double> z(static_cast<std::size_t>(free_nodes() * dim));
    int off = closed ? 0 : 1;
    for (int i = 0; i < free_nodes(); ++i)
      for (int d = 0; d < dim; ++d)
        z[static_cast<std::size_t>(i * dim + d)] =
            path.nodes[static_cast<std::size_t>(i + off)][d];
    return z;
  }

  double eval(const std::vector<double>& z, std::vector<double>& grad, DiscretePath& scratch) const {
    unpack(z, scratch);
    for (int i = 0; i <= m; ++i)
      if (!sys->chart_ok(scratch.nodes[static_cast<std::size_t>(i)])) return kNaN;
    const double h = T / m;
    std::fill(grad.begin(), grad.end(), 0.0);
    double a = 0;
    auto add = [&](int node, const Vec& contrib) {
      int j = closed ? node % m : node;
      if (!closed) {
        if (j == 0 || j == m) return;
        j -= 1;
      }
      for (int d = 0; d < dim; ++d) grad[static_cast<std::size_t>(j * dim + d)] += contrib[d];
    };
    for (int i = 0; i < m; ++i) {
      const Vec& x0 = scratch.nodes[static_cast<std::size_t>(i)];
      const Vec& x1 = scratch.nodes[static_cast<std::size_t>(i) + 1];
      Vec v = (1.0 / h) * (x1 - x0);
      double li = sys->lagrangian(x0, v), lj = sys->lagrangian(x1, v);
      a += 0.5 * h * (li + lj);
      Vec pv = sys->dLdv(x0, v) + sys->dLdv(x1, v);
      add(i, (0.5 * h) * sys->dLdx(x0, v) - 0.5 * pv);
      add(i + 1, (0.5 * h) * sys->dLdx(x1, v) + 0.5 * pv);
    }
    return std::isfinite(a) ? a : kNaN;
  }

  // Diagonal inverse-curvature scale from the velocity Hessian of L at rest.
  // Node curvature of the discrete action is ~ 2 B / h per coordinate.
  void precondition(const std::vector<double>& z, std::vector<double>& diag,
                    DiscretePath& scratch) const {
    unpack(z, scratch);
    const double h = T / m;
    int off = closed ? 0 : 1;
    Vec vzero = Vec::zeros(dim);
    for (int i = 0; i < free_nodes(); ++i) {
      const Vec& x = scratch.nodes[static_cast<std::size_t>(i + off)];
      if (!sys->chart_ok(x)) continue;  // keep previous scale at bad probes
      Vec B = d2Ldv2_diag(*sys, x, vzero);
      for (int d = 0; d < dim; ++d) {
        double b = std::max(std::abs(B[d]), 1e-8);
        diag[static_cast<std::size_t>(i * dim + d)] = std::clamp(h / (2 * b), 1e-12, 1e6);
      }
    }
  }
};

// Per-coordinate floor used to keep seeded starts inside one-sided charts
// (e.g. y > 0). Coordinates whose sample box is strictly positive get one.
Vec chart_floor(const LagrangianSystem& sys) {
  Vec f(sys.dim);
  for (int d = 0; d < sys.dim; ++d)
    f[d] = sys.sample_lo[d] > 0 ? 0.05 * sys.sample_lo[d] : -std::numeric_limits<double>::infinity();
  return f;
}

void clamp_nodes(DiscretePath& path, const Vec& floor) {
  for (auto& x : path.nodes)
    for (int d = 0; d < x.n; ++d) x[d] = std::max(x[d], floor[d]);
}

std::vector<std::pair<int, int>> coordinate_planes(int dim) {
  std::vector<std::pair<int, int>> planes;
  for (int a = 0; a < dim; ++a)
    for (int b = a + 1; b < dim; ++b) planes.push_back({a, b});
  if (planes.empty()) planes.push_back({0, 0});
  return planes;
}

DiscretePath circle_init(const LagrangianSystem& sys, double T, int m, Rng& rng, int j,
                         const std::optional<Vec>& through) {
  const int dim = sys.dim;
  auto planes = coordinate_planes(dim);
  auto [pa, pb] = planes[static_cast<std::size_t>(j) % planes.size()];
  double r = rng.log_uniform(0.3, 2.5 * std::max(1.0, std::sqrt(T / M_PI)));
  double phase = rng.uniform(0, 2 * M_PI);

  Vec center(dim);
  for (int d = 0; d < dim; ++d) {
    double mid = 0.5 * (sys.sample_lo[d] + sys.sample_hi[d]);
    double span = sys.sample_hi[d] - sys.sample_lo[d];
    center[d] = mid + 0.35 * span * rng.uniform(-0.5, 0.5);
  }
  double ra = r, rb = r;
  auto cap = [&](int d, double rr) {
    return sys.sample_lo[d] > 0 ? std::min(rr, 0.7 * center[d]) : rr;
  };
  ra = cap(pa, ra);
  rb = cap(pb, rb);

  if (through) {
    // circle passing through the prescribed point: offset the center from it
    center = *through;
    double psi = rng.uniform(0, 2 * M_PI);
    ra = cap(pa, ra);
    rb = cap(pb, rb);
    center[pa] += ra * std::cos(psi);
    center[pb] += rb * std::sin(psi);
    phase = std::atan2(-std::sin(psi), -std::cos(psi));
    if (sys.sample_lo[pa] > 0) center[pa] = std::max(center[pa], 1.4 * ra);
    if (sys.sample_lo[pb] > 0) center[pb] = std::max(center[pb], 1.4 * rb);
  }

  DiscretePath path;
  path.duration = T;
  path.closed = !through.has_value();
  path.nodes.resize(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) {
    double ang = 2 * M_PI * i / m + phase;
    Vec x = center;
    if (pa == pb) {
      x[pa] += ra * std::cos(ang);
    } else {
      x[pa] += ra * std::cos(ang);
      x[pb] += rb * std::sin(ang);
    }
    path.nodes[static_cast<std::size_t>(i)] = x;
  }
  if (through) {
    path.nodes[0] = *through;
    path.nodes[static_cast<std::size_t>(m)] = *through;
  } else {
    path.nodes[static_cast<std::size_t>(m)] = path.nodes[0];
  }
  clamp_nodes(path, chart_floor(sys));
  return path;
}

DiscretePath line_init(const LagrangianSystem& sys, const Vec& x0, const Vec& x1, double T, int m,
                       Rng& rng, int j) {
  const int dim = sys.dim;
  DiscretePath path;
  path.duration = T;
  path.closed = false;
  path.nodes.resize(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) {
    double s = static_cast<double>(i) / m;
    path.nodes[static_cast<std::size_t>(i)] = (1 - s) * x0 + s * x1;
  }
  if (j > 0) {
    Vec dir1(dim), dir2(dim);
    for (int d = 0; d < dim; ++d) {
      dir1[d] = rng.normal();
      dir2[d] = rng.normal();
    }
    double n1 = std::max(norm2(dir1), 1e-12), n2 = std::max(norm2(dir2), 1e-12);
    double amp1 = 0.35 * j * std::max(1.0, 0.5 * std::pow(T, 2.0 / 3.0)) * rng.uniform(0.6, 1.0);
    double amp2 = 0.3 * amp1 * rng.uniform();
    for (int i = 1; i < m; ++i) {
      double s = static_cast<double>(i) / m;
      double b1 = std::sin(M_PI * s), b2 = std::sin(2 * M_PI * s);
      Vec& x = path.nodes[static_cast<std::size_t>(i)];
      x = x + (amp1 * b1 / n1) * dir1 + (amp2 * b2 / n2) * dir2;
    }
    clamp_nodes(path, chart_floor(sys));
    path.nodes[0] = x0;
    path.nodes[static_cast<std::size_t>(m)] = x1;
  }
  return path;
}

struct StartOutcome {
  bool valid = false;
  double f = std::numeric_limits<double>::infinity();
  double grad_inf = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::string stop_reason = "inadmissible_start";
  std::vector<double> z;
};

MinimizeOutcome run_multistart(const LagrangianSystem& sys, const PathProblem& prob,
                               const MinimizeConfig& cfg,
                               const std::function<DiscretePath(Rng&, int)>& make_init) {
  const int starts = std::max(1, cfg.starts);
  std::vector<StartOutcome> outcomes(static_cast<std::size_t>(starts));

  auto run_one = [&](int j) {
    Rng rng(cfg.seed, {0x5eedULL, static_cast<std::uint64_t>(j)});
    DiscretePath init = make_init(rng, j);
    DiscretePath scratch;
    std::vector<double> z0 = prob.pack(init);

    LbfgsOptions opts;
    opts.memory = cfg.lbfgs_memory;
    opts.max_iters = cfg.max_iters;
    opts.grad_tol = cfg.grad_tol;
    opts.early_stop = cfg.early_stop;
    DiscretePath pre_scratch;
    opts.precond = [&prob, &pre_scratch](const std::vector<double>& z, std::vector<double>& diag) {
      prob.precondition(z, diag, pre_scratch);
    };
    auto fn = [&prob, &scratch](const std::vector<double>& z, std::vector<double>& grad) {
      return prob.eval(z, grad, scratch);
    };
    LbfgsResult r = lbfgs_minimize(std::move(z0), fn, opts);

    StartOutcome& out = outcomes[static_cast<std::size_t>(j)];
    if (!std::isfinite(r.f)) return;  // inadmissible start, leave marked invalid
    out.valid = true;
    out.f = r.f;
    out.grad_inf = r.grad_inf;
    out.iterations = r.iterations;
    out.stop_reason = r.stop_reason;
    out.z = std::move(r.x);
  };

  int threads = std::max(1, cfg.threads);
  if (threads <= 1 || starts <= 1) {
    for (int j = 0; j < starts; ++j) run_one(j);
  } else {
    std::vector<std::thread> pool;
    std::size_t used = static_cast<std::size_t>(std::min(threads, starts));
    for (std::size_t t = 0; t < used; ++t)
      pool.emplace_back([&, t]() {
        for (int j = static_cast<int>(t); j < starts; j += static_cast<int>(used)) run_one(j);
      });
    for (auto& th : pool) th.join();
  }

  int best = -1;
  for (int j = 0; j < starts; ++j) {
    const StartOutcome& o = outcomes[static_cast<std::size_t>(j)];
    if (!o.valid) continue;
    if (best < 0) {
      best = j;
      continue;
    }
    const StartOutcome& b = outcomes[static_cast<std::size_t>(best)];
    if (o.f < b.f || (o.f == b.f && o.grad_inf < b.grad_inf)) best = j;
  }
  if (best < 0) throw NumericalError(sys.name + ": no admissible start in multi-start minimization");

  const StartOutcome& win = outcomes[static_cast<std::size_t>(best)];
  MinimizeOutcome result;
  prob.unpack(win.z, result.path);
  result.report.action = win.f;
  result.report.energy_mean = path_mean_energy(sys, result.path);
  result.report.grad_inf = win.grad_inf;
  result.report.iterations = win.iterations;
  result.report.start_index = best;
  result.report.nodes = prob.m;
  result.report.converged = win.stop_reason == "grad_tol" || win.stop_reason == "early_stop";
  result.report.stop_reason = win.stop_reason;
  return result;
}

}  // namespace

MinimizeOutcome minimize_fixed_endpoints(const LagrangianSystem& sys, const ChartPoint& x0,
                                         const ChartPoint& x1, double T,
                                         const MinimizeConfig& cfg) {
  if (!(T > 0)) throw InputError("minimize_fixed_endpoints: T must be positive");
  if (x0.coords.n != sys.dim || x1.coords.n != sys.dim)
    throw InputError("minimize_fixed_endpoints: endpoint dimension mismatch");
  if (!sys.chart_ok(x0.coords) || !sys.chart_ok(x1.coords))
    throw InputError("minimize_fixed_endpoints: endpoint outside the chart");

  PathProblem prob{&sys, T, false, pick_nodes(T, cfg), sys.dim, x0.coords, x1.coords};
  const bool coincide = dist(x0.coords, x1.coords) < 1e-12;
  const int starts = std::max(1, cfg.starts);
  auto make_init = [&](Rng& rng, int j) {
    if (coincide && j >= (starts + 1) / 2)
      return circle_init(sys, T, prob.m, rng, j, std::optional<Vec>(x0.coords));
    return line_init(sys, x0.coords, x1.coords, T, prob.m, rng, j);
  };
  return run_multistart(sys, prob, cfg, make_init);
}

MinimizeOutcome minimize_closed_loop(const LagrangianSystem& sys, double T,
                                     const MinimizeConfig& cfg) {
  if (!(T > 0)) throw InputError("minimize_closed_loop: T must be positive");
  PathProblem prob{&sys, T, true, pick_nodes(T, cfg), sys.dim, Vec(), Vec()};
  auto make_init = [&](Rng& rng, int j) {
    return circle_init(sys, T, prob.m, rng, j, std::nullopt);
  };
  return run_multistart(sys, prob, cfg, make_init);
}

double finite_time_potential(const LagrangianSystem& sys, const ChartPoint& x0,
                             const ChartPoint& x1, double T, const MinimizeConfig& cfg) {
  return minimize_fixed_endpoints(sys, x0, x1, T, cfg).report.action;
}

}  // namespace manelab
