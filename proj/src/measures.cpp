#include "manelab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "manelab/systems.hpp"

namespace manelab {

HolonomicMeasureSample sample_from_path(const LagrangianSystem& sys, const DiscretePath& path) {
  const int m = path.segments();
  if (m < 1) throw InputError("sample_from_path: empty path");
  HolonomicMeasureSample out;
  out.source = sys.name + ":path";
  out.atoms.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    out.atoms.push_back(
        {{{path.nodes[static_cast<std::size_t>(i)]}, node_velocity(path, i)}, 1.0 / m});
  return out;
}

HolonomicMeasureSample sample_from_segment(const LagrangianSystem& sys, const OrbitSegment& seg) {
  const std::size_t n = seg.states.size();
  if (n < 2) throw InputError("sample_from_segment: segment too short");
  HolonomicMeasureSample out;
  out.source = sys.name + ":orbit";
  out.atoms.reserve(n);
  const double T = seg.duration();
  for (std::size_t i = 0; i < n; ++i) {
    const CotangentState& st = seg.states[i];
    Vec dq(st.base.coords.n), dp(st.momentum.n);
    sys.ham_vector_field(st.base.coords, st.momentum, dq, dp);
    double w;
    if (i == 0)
      w = 0.5 * (seg.times[1] - seg.times[0]);
    else if (i + 1 == n)
      w = 0.5 * (seg.times[n - 1] - seg.times[n - 2]);
    else
      w = 0.5 * (seg.times[i + 1] - seg.times[i - 1]);
    out.atoms.push_back({{st.base, dq}, w / T});
  }
  return out;
}

HolonomicMeasureSample rescale_measure(const HolonomicMeasureSample& m, double lambda) {
  HolonomicMeasureSample out = m;
  for (auto& a : out.atoms) a.state.velocity = lambda * a.state.velocity;
  out.source = m.source + ":rescaled";
  return out;
}

double measure_integral_L(const LagrangianSystem& sys, const HolonomicMeasureSample& m) {
  double s = 0;
  for (const auto& a : m.atoms)
    s += a.weight * sys.lagrangian(a.state.base.coords, a.state.velocity);
  return s;
}

double measure_integral_E(const LagrangianSystem& sys, const HolonomicMeasureSample& m) {
  double s = 0;
  for (const auto& a : m.atoms) s += a.weight * energy(sys, a.state);
  return s;
}

StationarityCheck stationarity_residual(const LagrangianSystem& sys,
                                        const HolonomicMeasureSample& m, double fd_step) {
  if (!(fd_step > 0)) throw InputError("stationarity_residual: fd_step must be positive");
  double fp = measure_integral_L(sys, rescale_measure(m, 1 + fd_step));
  double fm = measure_integral_L(sys, rescale_measure(m, 1 - fd_step));
  double fd = (fp - fm) / (2 * fd_step);
  double identity = measure_integral_E(sys, m) + measure_integral_L(sys, m);
  return {fd, identity, std::abs(fd - identity)};
}

HorocycleResult horocycle_measure(const LagrangianSystem& sys, double p_alpha, double p_beta,
                                  double length, const IntegratorConfig& cfg) {
  if (sys.kind != SystemKind::psl2r)
    throw InputError("horocycle_measure: only defined for the half-space model");
  if (!(length > 0)) throw InputError("horocycle_measure: length must be positive");
  CotangentState start = psl2r_horocycle_state(p_alpha, p_beta);
  HorocycleResult out;
  out.orbit = integrate(sys, start, length, cfg);
  out.sample = sample_from_segment(sys, out.orbit);
  out.sample.source = sys.name + ":horocycle";
  return out;
}

std::optional<GraphWitness> graph_union_witness(const HolonomicMeasureSample& ma,
                                                const HolonomicMeasureSample& mb, double tol) {
  if (!(tol > 0)) throw InputError("graph_union_witness: tol must be positive");
  if (ma.atoms.empty() || mb.atoms.empty()) return std::nullopt;
  const int dim = ma.atoms[0].state.base.coords.n;

  // bucket mb's atoms by cell of side tol; collisions resolved by scanning
  // neighbor cells, keeping the maximal velocity gap (ties: first in order)
  auto cell_key = [&](const Vec& x) {
    std::array<long long, Vec::kMaxDim> key{};
    for (int d = 0; d < dim; ++d)
      key[static_cast<std::size_t>(d)] = static_cast<long long>(std::floor(x[d] / tol));
    return key;
  };
  std::map<std::array<long long, Vec::kMaxDim>, std::vector<std::size_t>> buckets;
  for (std::size_t j = 0; j < mb.atoms.size(); ++j)
    buckets[cell_key(mb.atoms[j].state.base.coords)].push_back(j);

  std::optional<GraphWitness> best;
  std::array<long long, Vec::kMaxDim> probe{};
  for (const auto& atom_a : ma.atoms) {
    auto base_key = cell_key(atom_a.state.base.coords);
    // visit the 3^dim neighborhood of the cell
    int n_cells = 1;
    for (int d = 0; d < dim; ++d) n_cells *= 3;
    for (int c = 0; c < n_cells; ++c) {
      int rem = c;
      probe = base_key;
      for (int d = 0; d < dim; ++d) {
        probe[static_cast<std::size_t>(d)] += (rem % 3) - 1;
        rem /= 3;
      }
      auto it = buckets.find(probe);
      if (it == buckets.end()) continue;
      for (std::size_t j : it->second) {
        const auto& atom_b = mb.atoms[j];
        double bd = dist(atom_a.state.base.coords, atom_b.state.base.coords);
        if (bd > tol) continue;
        double vg = dist(atom_a.state.velocity, atom_b.state.velocity);
        if (!best || vg > best->velocity_gap)
          best = GraphWitness{bd, vg, atom_a.state, atom_b.state};
      }
    }
  }
  return best;
}

}  // namespace manelab
