#include "manelab/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace manelab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

BarrierProfile barrier_profile(const LagrangianSystem& sys, const ChartPoint& x0,
                               const ChartPoint& x1, double c, const std::vector<double>& T_grid,
                               const MinimizeConfig& cfg) {
  if (T_grid.empty()) throw InputError("barrier_profile: empty T grid");
  std::vector<double> grid = T_grid;
  std::sort(grid.begin(), grid.end());

  BarrierProfile prof;
  prof.c = c;
  for (double T : grid) {
    BarrierRow row{T, 0, 0, false};
    try {
      row.hT = finite_time_potential(sys, x0, x1, T, cfg);
      row.hT_plus = row.hT + c * T;
      row.ok = true;
    } catch (const NumericalError&) {
      row.hT = row.hT_plus = std::numeric_limits<double>::quiet_NaN();
    }
    prof.rows.push_back(row);
  }

  // liminf proxy and asymptote fit over the tail half of the grid
  std::size_t tail_from = prof.rows.size() / 2;
  prof.liminf_proxy = kInf;
  double s1 = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n_fit = 0;
  for (std::size_t i = tail_from; i < prof.rows.size(); ++i) {
    const BarrierRow& r = prof.rows[i];
    if (!r.ok) continue;
    prof.liminf_proxy = std::min(prof.liminf_proxy, r.hT_plus);
    double x = 1.0 / r.T;
    s1 += 1; sx += x; sy += r.hT_plus; sxx += x * x; sxy += x * r.hT_plus;
    ++n_fit;
  }
  if (n_fit >= 2) {
    double det = s1 * sxx - sx * sx;
    if (std::abs(det) > 1e-14) {
      // least squares for hT_plus = a - b / T
      prof.fit_a = (sy * sxx - sx * sxy) / det;
      prof.fit_b = -(s1 * sxy - sx * sy) / det;
      prof.fit_ok = true;
    }
  }
  return prof;
}

AubryIndicator aubry_indicator(const BarrierProfile& profile, double eps_aubry) {
  if (!(eps_aubry > 0)) throw InputError("aubry_indicator: eps must be positive");
  if (!std::isfinite(profile.liminf_proxy))
    throw NumericalError("aubry_indicator: no successful tail entries in the profile");
  return {profile.liminf_proxy, profile.liminf_proxy <= eps_aubry};
}

PreOrbit make_preorbit(std::vector<OrbitSegment> segments) {
  if (segments.empty()) throw InputError("make_preorbit: no segments");
  PreOrbit y;
  y.segments = std::move(segments);
  for (std::size_t i = 0; i < y.segments.size(); ++i) {
    if (y.segments[i].states.size() < 2) throw InputError("make_preorbit: degenerate segment");
    y.total_duration += y.segments[i].duration();
    if (i + 1 < y.segments.size()) {
      double j = phase_dist(y.segments[i].back(), y.segments[i + 1].front());
      y.jumps.push_back(j);
      y.delta += j;
    }
  }
  return y;
}

PreOrbit concat_preorbits(const PreOrbit& a, const PreOrbit& b) {
  PreOrbit y;
  y.segments = a.segments;
  y.segments.insert(y.segments.end(), b.segments.begin(), b.segments.end());
  y.jumps = a.jumps;
  y.jumps.push_back(phase_dist(a.segments.back().back(), b.segments.front().front()));
  y.jumps.insert(y.jumps.end(), b.jumps.begin(), b.jumps.end());
  y.total_duration = a.total_duration + b.total_duration;
  y.delta = a.delta + y.jumps[a.jumps.size()] + b.delta;
  return y;
}

double preorbit_action(const LagrangianSystem& sys, const PreOrbit& y, double k) {
  double a = 0;
  for (const auto& seg : y.segments) a += orbit_action(sys, seg, k);
  return a;
}

EnergyDefect preorbit_energy_defect(const LagrangianSystem& sys, const PreOrbit& y) {
  EnergyDefect out{0, 0};
  const double e0 = y.segments.front().energy_log.front();
  for (const auto& seg : y.segments) {
    for (double e : seg.energy_log) out.actual = std::max(out.actual, std::abs(e - e0));
    out.bound += seg.max_energy_drift;
  }
  // per-jump contribution: jump size times a sampled Lipschitz constant of H
  // along the straight phase chord between the two endpoints (x1.5 safety)
  for (std::size_t i = 0; i + 1 < y.segments.size(); ++i) {
    const CotangentState& a = y.segments[i].back();
    const CotangentState& b = y.segments[i + 1].front();
    const int n = a.base.coords.n;
    double lip = 0;
    const int samples = 16;
    for (int s = 0; s <= samples; ++s) {
      double t = static_cast<double>(s) / samples;
      Vec q = (1 - t) * a.base.coords + t * b.base.coords;
      Vec p = (1 - t) * a.momentum + t * b.momentum;
      if (!sys.chart_ok(q)) continue;
      // |grad H| via the vector field: (dH/dp, -dH/dx) has the same norm
      Vec dq(n), dp(n);
      sys.ham_vector_field(q, p, dq, dp);
      lip = std::max(lip, std::sqrt(dot(dq, dq) + dot(dp, dp)));
    }
    out.bound += 1.5 * lip * y.jumps[i];
  }
  return out;
}

double shift_identity_residual(const LagrangianSystem& sys, const PreOrbit& y, double k, double t) {
  if (!(t > 0) || !(t < y.total_duration))
    throw InputError("shift_identity_residual: t must lie strictly inside the chain");
  // locate the segment containing t and snap to its nearest grid knot
  double t0 = 0;
  std::size_t si = 0;
  for (; si < y.segments.size(); ++si) {
    double d = y.segments[si].duration();
    if (t <= t0 + d || si + 1 == y.segments.size()) break;
    t0 += d;
  }
  const OrbitSegment& seg = y.segments[si];
  double local = std::clamp(t - t0, 0.0, seg.duration());
  int knot = 0;
  double bestgap = kInf;
  for (std::size_t i = 0; i < seg.times.size(); ++i) {
    double gap = std::abs((seg.times[i] - seg.times.front()) - local);
    if (gap < bestgap) {
      bestgap = gap;
      knot = static_cast<int>(i);
    }
  }
  knot = std::clamp(knot, 1, static_cast<int>(seg.times.size()) - 2);

  double total = preorbit_action(sys, y, k);
  double head = 0, tailv = 0;
  for (std::size_t i = 0; i < si; ++i) head += orbit_action(sys, y.segments[i], k);
  head += orbit_action(sys, slice_segment(seg, 0, knot), k);
  tailv += orbit_action(sys, slice_segment(seg, knot, static_cast<int>(seg.times.size()) - 1), k);
  for (std::size_t i = si + 1; i < y.segments.size(); ++i)
    tailv += orbit_action(sys, y.segments[i], k);
  return std::abs(total - head - tailv);
}

OrbitSegment lift_path_to_orbit(const LagrangianSystem& sys, const DiscretePath& path,
                                const IntegratorConfig& cfg) {
  CotangentState start{{path.nodes.front()}, initial_covector(sys, path)};
  return integrate(sys, start, path.duration, cfg);
}

PhaseBarrierResult phase_barrier_upper(const LagrangianSystem& sys, const CotangentState& X0,
                                       const CotangentState& X1, double k,
                                       const PhaseBarrierConfig& cfg) {
  std::vector<double> durations = cfg.durations;
  if (durations.empty())
    for (int j = 0; j <= 3; ++j) durations.push_back(8 * M_PI * std::pow(2.0, j));
  std::sort(durations.begin(), durations.end());

  PhaseBarrierResult res;
  res.value = kInf;

  double h0 = sys.hamiltonian(X0.base.coords, X0.momentum);
  double h1 = sys.hamiltonian(X1.base.coords, X1.momentum);
  if (std::abs(h0 - h1) > cfg.energy_tol) return res;  // incompatible levels: empty family

  for (double T : durations) {
    PhaseBarrierMember mem{T, 0, 0, 0, false};
    try {
      MinimizeOutcome mo =
          minimize_fixed_endpoints(sys, {X0.base.coords}, {X1.base.coords}, T, cfg.minimize);
      IntegratorConfig ic = cfg.integrator;
      long steps = std::max<long>(1, std::llround(T / ic.step));
      ic.record_stride = static_cast<int>(std::max<long>(1, steps / 4096));
      OrbitSegment seg = lift_path_to_orbit(sys, mo.path, ic);
      mem.action = orbit_action(sys, seg, k);
      mem.gap_start = phase_dist(seg.front(), X0);
      mem.gap_end = phase_dist(seg.back(), X1);
      mem.admissible = mem.gap_start + mem.gap_end <= cfg.gap_cap;
      if (mem.admissible) res.value = std::min(res.value, mem.action);
    } catch (const NumericalError&) {
      mem.action = std::numeric_limits<double>::quiet_NaN();
    }
    res.members.push_back(mem);
  }
  return res;
}

}  // namespace manelab
