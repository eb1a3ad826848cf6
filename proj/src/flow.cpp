#include "manelab/flow.hpp"

#include <cmath>

namespace manelab {

namespace {

struct PhaseVec {
  Vec q, p;
};

void check_state(const LagrangianSystem& sys, const Vec& q, const Vec& p) {
  if (!all_finite(q) || !all_finite(p)) throw NumericalError(sys.name + ": non-finite state");
  if (!sys.chart_ok(q)) throw NumericalError(sys.name + ": orbit left the chart");
}

PhaseVec field(const LagrangianSystem& sys, const Vec& q, const Vec& p) {
  PhaseVec f;
  f.q = Vec(q.n);
  f.p = Vec(p.n);
  sys.ham_vector_field(q, p, f.q, f.p);
  return f;
}

void rk4_step(const LagrangianSystem& sys, Vec& q, Vec& p, double h) {
  PhaseVec k1 = field(sys, q, p);
  PhaseVec k2 = field(sys, q + (h / 2) * k1.q, p + (h / 2) * k1.p);
  PhaseVec k3 = field(sys, q + (h / 2) * k2.q, p + (h / 2) * k2.p);
  PhaseVec k4 = field(sys, q + h * k3.q, p + h * k3.p);
  for (int i = 0; i < q.n; ++i) {
    q[i] += (h / 6) * (k1.q[i] + 2 * k2.q[i] + 2 * k3.q[i] + k4.q[i]);
    p[i] += (h / 6) * (k1.p[i] + 2 * k2.p[i] + 2 * k3.p[i] + k4.p[i]);
  }
}

void midpoint_step(const LagrangianSystem& sys, Vec& q, Vec& p, double h) {
  // fixed-point iteration on the midpoint state
  Vec qm = q, pm = p;
  for (int it = 0; it < 40; ++it) {
    PhaseVec f = field(sys, qm, pm);
    Vec qn = q + (h / 2) * f.q;
    Vec pn = p + (h / 2) * f.p;
    double delta = 0;
    for (int i = 0; i < q.n; ++i)
      delta = std::max({delta, std::abs(qn[i] - qm[i]), std::abs(pn[i] - pm[i])});
    qm = qn;
    pm = pn;
    if (delta < 1e-14) break;
  }
  PhaseVec f = field(sys, qm, pm);
  for (int i = 0; i < q.n; ++i) {
    q[i] += h * f.q[i];
    p[i] += h * f.p[i];
  }
}

}  // namespace

OrbitSegment integrate(const LagrangianSystem& sys, const CotangentState& start, double duration,
                       const IntegratorConfig& cfg) {
  if (!(cfg.step > 0)) throw InputError("integrate: step must be positive");
  if (cfg.record_stride < 1) throw InputError("integrate: record_stride must be positive");
  check_state(sys, start.base.coords, start.momentum);

  const long n_steps = std::max<long>(1, std::llround(std::abs(duration) / cfg.step));
  const double h = duration / static_cast<double>(n_steps);

  OrbitSegment seg;
  seg.times.reserve(static_cast<std::size_t>(n_steps) + 1);
  seg.states.reserve(static_cast<std::size_t>(n_steps) + 1);
  seg.energy_log.reserve(static_cast<std::size_t>(n_steps) + 1);
  for (const auto& fi : sys.first_integrals)
    seg.integral_logs.push_back({fi.first, {}});

  Vec q = start.base.coords, p = start.momentum;
  auto record = [&](double t) {
    CotangentState st{{q}, p};
    seg.times.push_back(t);
    seg.energy_log.push_back(sys.hamiltonian(q, p));
    for (std::size_t j = 0; j < sys.first_integrals.size(); ++j)
      seg.integral_logs[j].second.push_back(sys.first_integrals[j].second(st));
    seg.states.push_back(std::move(st));
  };
  record(0.0);

  const double e0 = seg.energy_log.front();
  std::vector<double> i0;
  for (const auto& fi : sys.first_integrals) i0.push_back(fi.second(seg.states.front()));

  if (duration != 0.0) {
    for (long i = 1; i <= n_steps; ++i) {
      if (cfg.scheme == Scheme::rk4)
        rk4_step(sys, q, p, h);
      else
        midpoint_step(sys, q, p, h);
      check_state(sys, q, p);
      CotangentState st{{q}, p};
      seg.max_energy_drift = std::max(seg.max_energy_drift, std::abs(sys.hamiltonian(q, p) - e0));
      for (std::size_t j = 0; j < sys.first_integrals.size(); ++j)
        seg.max_integral_drift =
            std::max(seg.max_integral_drift, std::abs(sys.first_integrals[j].second(st) - i0[j]));
      if (i % cfg.record_stride == 0 || i == n_steps) record(h * static_cast<double>(i));
    }
  }
  seg.drift_warning = seg.max_energy_drift > cfg.max_energy_drift ||
                      seg.max_integral_drift > cfg.max_energy_drift;
  return seg;
}

double orbit_action(const LagrangianSystem& sys, const OrbitSegment& seg, double k) {
  const std::size_t n = seg.states.size();
  if (n < 2) return 0;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CotangentState& st = seg.states[i];
    Vec dq(st.base.coords.n), dp(st.momentum.n);
    sys.ham_vector_field(st.base.coords, st.momentum, dq, dp);
    g[i] = dot(st.momentum, dq) - sys.hamiltonian(st.base.coords, st.momentum) + k;
  }
  double a = 0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    a += 0.5 * (seg.times[i + 1] - seg.times[i]) * (g[i] + g[i + 1]);
  return a;
}

double el_residual(const LagrangianSystem& sys, const DiscretePath& path) {
  const int m = path.segments();
  if (m < 4) throw InputError("el_residual: path too short");
  const double h = path.step();
  auto node = [&](int i) -> const Vec& {
    if (path.closed) {
      int j = ((i % m) + m) % m;
      return path.nodes[static_cast<std::size_t>(j)];
    }
    return path.nodes[static_cast<std::size_t>(i)];
  };
  auto cvel = [&](int i) {
    return (1.0 / (2 * h)) * (node(i + 1) - node(i - 1));
  };
  const int lo = path.closed ? 0 : 2;
  const int hi = path.closed ? m - 1 : m - 2;
  double worst = 0;
  for (int i = lo; i <= hi; ++i) {
    Vec pm = sys.dLdv(node(i - 1), cvel(i - 1));
    Vec pp = sys.dLdv(node(i + 1), cvel(i + 1));
    Vec fx = sys.dLdx(node(i), cvel(i));
    for (int d = 0; d < fx.n; ++d)
      worst = std::max(worst, std::abs((pp[d] - pm[d]) / (2 * h) - fx[d]));
  }
  return worst;
}

double time_reversal_gap(const LagrangianSystem& sys, const CotangentState& start, double duration,
                         const IntegratorConfig& cfg) {
  OrbitSegment fwd = integrate(sys, start, duration, cfg);
  OrbitSegment back = integrate(sys, fwd.back(), -duration, cfg);
  return phase_dist(back.back(), start);
}

OrbitSegment slice_segment(const OrbitSegment& seg, int i0, int i1) {
  if (i0 < 0 || i1 >= static_cast<int>(seg.states.size()) || i0 >= i1)
    throw InputError("slice_segment: bad index range");
  OrbitSegment out;
  out.times.assign(seg.times.begin() + i0, seg.times.begin() + i1 + 1);
  out.states.assign(seg.states.begin() + i0, seg.states.begin() + i1 + 1);
  out.energy_log.assign(seg.energy_log.begin() + i0, seg.energy_log.begin() + i1 + 1);
  for (const auto& [name, log] : seg.integral_logs)
    out.integral_logs.push_back({name, {log.begin() + i0, log.begin() + i1 + 1}});
  double e0 = out.energy_log.front();
  for (double e : out.energy_log)
    out.max_energy_drift = std::max(out.max_energy_drift, std::abs(e - e0));
  out.drift_warning = seg.drift_warning;
  return out;
}

}  // namespace manelab
