#include "manelab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "manelab/acceptance.hpp"
#include "manelab/barrier.hpp"
#include "manelab/critical_value.hpp"
#include "manelab/flow.hpp"
#include "manelab/geometry.hpp"
#include "manelab/measures.hpp"
#include "manelab/rng.hpp"
#include "manelab/symmaps.hpp"
#include "manelab/systems.hpp"
#include "manelab/variational.hpp"

namespace manelab {

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string strf(const char* fmt, ...) {
  char buf[768];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

// All numeric cells are printed with %.17g under the "C" locale, so reruns of
// the same resolved config produce byte-identical files.
std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- config field access with uniform error text ----

const json& need_key(const json& b, const char* key, const char* ctx) {
  if (!b.is_object() || !b.contains(key))
    throw InputError(strf("%s: missing required key \"%s\"", ctx, key));
  return b.at(key);
}

double need_num(const json& b, const char* key, const char* ctx) {
  const json& v = need_key(b, key, ctx);
  if (!v.is_number()) throw InputError(strf("%s: \"%s\" must be a number", ctx, key));
  return v.get<double>();
}

double opt_num(const json& b, const char* key, double dflt, const char* ctx) {
  if (!b.is_object() || !b.contains(key)) return dflt;
  const json& v = b.at(key);
  if (!v.is_number()) throw InputError(strf("%s: \"%s\" must be a number", ctx, key));
  return v.get<double>();
}

int opt_int(const json& b, const char* key, int dflt, const char* ctx) {
  double v = opt_num(b, key, dflt, ctx);
  return static_cast<int>(v);
}

bool opt_bool(const json& b, const char* key, bool dflt, const char* ctx) {
  if (!b.is_object() || !b.contains(key)) return dflt;
  const json& v = b.at(key);
  if (!v.is_boolean()) throw InputError(strf("%s: \"%s\" must be a boolean", ctx, key));
  return v.get<bool>();
}

std::string opt_str(const json& b, const char* key, const std::string& dflt, const char* ctx) {
  if (!b.is_object() || !b.contains(key)) return dflt;
  const json& v = b.at(key);
  if (!v.is_string()) throw InputError(strf("%s: \"%s\" must be a string", ctx, key));
  return v.get<std::string>();
}

std::vector<double> need_list(const json& b, const char* key, const char* ctx) {
  const json& v = need_key(b, key, ctx);
  if (!v.is_array() || v.empty())
    throw InputError(strf("%s: \"%s\" must be a non-empty array of numbers", ctx, key));
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw InputError(strf("%s: \"%s\" must contain only numbers", ctx, key));
    out.push_back(e.get<double>());
  }
  return out;
}

Vec vec_from_json(const json& v, const char* key, int dim, const char* ctx) {
  if (!v.is_array())
    throw InputError(strf("%s: \"%s\" must be an array of %d numbers", ctx, key, dim));
  std::vector<double> xs;
  for (const json& e : v) {
    if (!e.is_number()) throw InputError(strf("%s: \"%s\" must contain only numbers", ctx, key));
    xs.push_back(e.get<double>());
  }
  if (static_cast<int>(xs.size()) != dim)
    throw InputError(strf("%s: \"%s\" must have %d entries, got %d", ctx, key, dim,
                          static_cast<int>(xs.size())));
  return Vec::from_std(xs);
}

Vec need_vec(const json& b, const char* key, int dim, const char* ctx) {
  return vec_from_json(need_key(b, key, ctx), key, dim, ctx);
}

// ---- shared CSV / JSON emission ----

void write_csv(const fs::path& p, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream f(p);
  if (!f) throw InputError("cannot open output file: " + p.string());
  f << header << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) f << ',';
      f << fmt_num(r[i]);
    }
    f << "\n";
  }
  f.close();
  if (!f) throw InputError("failed while writing " + p.string());
}

json finite_or_null(double v) {
  if (std::isfinite(v)) return json(v);
  return json(nullptr);
}

// ---- building blocks from config ----

LagrangianSystem system_from_config(const json& cfg) {
  const json& s = need_key(cfg, "system", "config");
  SystemSpec spec;
  spec.kind = parse_system_kind(opt_str(s, "kind", "", "system"));
  if (s.contains("params")) {
    const json& ps = s.at("params");
    if (!ps.is_object()) throw InputError("system: \"params\" must be an object");
    for (auto it = ps.begin(); it != ps.end(); ++it) {
      if (!it.value().is_number())
        throw InputError(strf("system: param \"%s\" must be a number", it.key().c_str()));
      spec.params[it.key()] = it.value().get<double>();
    }
  }
  return build_system(spec);
}

MinimizeConfig minimize_from_block(const json& b, std::uint64_t seed, int threads,
                                   const char* ctx) {
  MinimizeConfig mc;
  mc.nodes_per_unit_time = opt_num(b, "nodes_per_unit_time", mc.nodes_per_unit_time, ctx);
  mc.min_nodes = opt_int(b, "min_nodes", mc.min_nodes, ctx);
  mc.max_nodes = opt_int(b, "max_nodes", mc.max_nodes, ctx);
  mc.starts = opt_int(b, "starts", mc.starts, ctx);
  mc.grad_tol = opt_num(b, "grad_tol", mc.grad_tol, ctx);
  mc.max_iters = opt_int(b, "max_iters", mc.max_iters, ctx);
  mc.lbfgs_memory = opt_int(b, "lbfgs_memory", mc.lbfgs_memory, ctx);
  mc.seed = seed;
  mc.threads = threads;
  if (!(mc.grad_tol > 0)) throw InputError(strf("%s: grad_tol must be positive", ctx));
  if (mc.starts < 1 || mc.min_nodes < 4 || mc.max_nodes < mc.min_nodes)
    throw InputError(strf("%s: invalid node/start counts", ctx));
  return mc;
}

IntegratorConfig integrator_from_block(const json& b, const char* ctx) {
  IntegratorConfig ic;
  ic.step = opt_num(b, "step", ic.step, ctx);
  ic.record_stride = opt_int(b, "record_stride", ic.record_stride, ctx);
  ic.max_energy_drift = opt_num(b, "max_energy_drift", ic.max_energy_drift, ctx);
  std::string scheme = opt_str(b, "scheme", "rk4", ctx);
  if (scheme == "rk4")
    ic.scheme = Scheme::rk4;
  else if (scheme == "implicit_midpoint")
    ic.scheme = Scheme::implicit_midpoint;
  else
    throw InputError(strf("%s: unknown scheme \"%s\"", ctx, scheme.c_str()));
  if (!(ic.step > 0) || !(ic.max_energy_drift > 0) || ic.record_stride < 1)
    throw InputError(strf("%s: step, record_stride, max_energy_drift must be positive", ctx));
  return ic;
}

// Map specs are parsed recursively; every atom is checked against the system
// dimension before anything is applied.
ExactSymplectomorphism map_from_json(const json& j, int dim, const char* ctx) {
  if (!j.is_object()) throw InputError(strf("%s: map spec must be an object", ctx));
  std::string type = opt_str(j, "type", "", ctx);
  if (type == "fiber_translation") {
    Vec center = need_vec(j, "center", dim, ctx);
    return gaussian_fiber_translation(dim, need_num(j, "amp", ctx), center,
                                      need_num(j, "width", ctx));
  }
  if (type == "translation") return translation_lift(need_vec(j, "shift", dim, ctx));
  if (type == "dilation") return dilation_lift(need_vec(j, "factors", dim, ctx));
  if (type == "compose") {
    const json& ms = need_key(j, "maps", ctx);
    if (!ms.is_array() || ms.empty())
      throw InputError(strf("%s: \"maps\" must be a non-empty array", ctx));
    ExactSymplectomorphism m = map_from_json(ms.at(0), dim, ctx);
    for (std::size_t i = 1; i < ms.size(); ++i) m = compose(m, map_from_json(ms.at(i), dim, ctx));
    return m;
  }
  throw InputError(strf("%s: unknown map type \"%s\"", ctx, type.c_str()));
}

CotangentState start_from_block(const LagrangianSystem& sys, const json& b, const char* ctx) {
  const json& st = need_key(b, "start", ctx);
  Vec base = need_vec(st, "base", sys.dim, ctx);
  if (st.contains("momentum")) return CotangentState{{base}, need_vec(st, "momentum", sys.dim, ctx)};
  if (st.contains("velocity"))
    return legendre_forward(sys, TangentState{{base}, need_vec(st, "velocity", sys.dim, ctx)});
  throw InputError(strf("%s: \"start\" needs \"momentum\" or \"velocity\"", ctx));
}

// Default probe state for map checks: the closed-orbit family midpoint when
// the system carries one, otherwise the sample-box center with a mild forward
// velocity.
CotangentState default_probe_state(const LagrangianSystem& sys) {
  if (sys.has_closed_orbit_states && sys.reference) {
    double k = 0.5 * (sys.reference->k_min + sys.reference->k_max);
    return reference_orbit_state(sys, k);
  }
  Vec x(sys.dim), v(sys.dim);
  for (int d = 0; d < sys.dim; ++d) {
    x[d] = 0.5 * (sys.sample_lo[d] + sys.sample_hi[d]);
    v[d] = 0.3;
  }
  return legendre_forward(sys, TangentState{{x}, v});
}

// ---- command handlers; each returns the "results" object of the summary ----

json cmd_integrate(const LagrangianSystem& sys, const json& b, const fs::path& out) {
  const char* ctx = "integrate";
  CotangentState start = start_from_block(sys, b, ctx);
  IntegratorConfig ic = integrator_from_block(b, ctx);
  double duration = need_num(b, "duration", ctx);
  double k = opt_num(b, "k", 0.0, ctx);

  OrbitSegment seg = integrate(sys, start, duration, ic);

  std::string header = "t";
  for (int d = 0; d < sys.dim; ++d) header += ",x" + std::to_string(d);
  for (int d = 0; d < sys.dim; ++d) header += ",p" + std::to_string(d);
  header += ",H";
  for (const auto& [nm, lg] : seg.integral_logs) header += ",I_" + nm;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < seg.states.size(); ++i) {
    std::vector<double> row{seg.times[i]};
    for (int d = 0; d < sys.dim; ++d) row.push_back(seg.states[i].base.coords[d]);
    for (int d = 0; d < sys.dim; ++d) row.push_back(seg.states[i].momentum[d]);
    row.push_back(seg.energy_log[i]);
    for (const auto& [nm, lg] : seg.integral_logs) row.push_back(lg[i]);
    rows.push_back(std::move(row));
  }
  write_csv(out / "orbit.csv", header, rows);

  json res;
  res["k"] = k;
  res["action"] = orbit_action(sys, seg, k);
  res["states"] = seg.states.size();
  res["final_base"] = seg.back().base.coords.to_std();
  res["final_momentum"] = seg.back().momentum.to_std();
  res["max_energy_drift"] = seg.max_energy_drift;
  res["max_integral_drift"] = seg.max_integral_drift;
  res["drift_warning"] = seg.drift_warning;
  std::printf("integrate: %zu recorded states, action %.12g, |dH| %.3g\n", seg.states.size(),
              orbit_action(sys, seg, k), seg.max_energy_drift);
  return res;
}

json cmd_minimize(const LagrangianSystem& sys, const json& b, const fs::path& out,
                  std::uint64_t seed, int threads) {
  const char* ctx = "minimize";
  MinimizeConfig mc = minimize_from_block(b, seed, threads, ctx);
  double T = need_num(b, "T", ctx);
  double k = opt_num(b, "k", 0.0, ctx);
  bool closed = opt_bool(b, "closed", false, ctx);

  MinimizeOutcome mo;
  if (closed) {
    mo = minimize_closed_loop(sys, T, mc);
  } else {
    ChartPoint x0{need_vec(b, "x0", sys.dim, ctx)};
    ChartPoint x1{need_vec(b, "x1", sys.dim, ctx)};
    mo = minimize_fixed_endpoints(sys, x0, x1, T, mc);
  }

  std::string header = "t";
  for (int d = 0; d < sys.dim; ++d) header += ",x" + std::to_string(d);
  std::vector<std::vector<double>> rows;
  double h = mo.path.step();
  for (std::size_t i = 0; i < mo.path.nodes.size(); ++i) {
    std::vector<double> row{h * static_cast<double>(i)};
    for (int d = 0; d < sys.dim; ++d) row.push_back(mo.path.nodes[i][d]);
    rows.push_back(std::move(row));
  }
  write_csv(out / "path.csv", header, rows);

  json res;
  res["closed"] = closed;
  res["T"] = T;
  res["k"] = k;
  res["action"] = mo.report.action;
  res["action_k"] = mo.report.action + k * T;
  res["energy_mean"] = mo.report.energy_mean;
  res["grad_inf"] = mo.report.grad_inf;
  res["iterations"] = mo.report.iterations;
  res["start_index"] = mo.report.start_index;
  res["nodes"] = mo.report.nodes;
  res["converged"] = mo.report.converged;
  res["stop_reason"] = mo.report.stop_reason;
  res["el_residual"] = el_residual(sys, mo.path);
  res["initial_covector"] = initial_covector(sys, mo.path).to_std();
  res["final_covector"] = final_covector(sys, mo.path).to_std();
  std::printf("minimize: action %.12g (k-shifted %.12g), grad %.3g, %s\n", mo.report.action,
              mo.report.action + k * T, mo.report.grad_inf, mo.report.stop_reason.c_str());
  return res;
}

json cmd_cu(const LagrangianSystem& sys, const json& b, const fs::path& out, std::uint64_t seed,
            int threads) {
  const char* ctx = "cu";
  CuConfig cc;
  cc.tol = opt_num(b, "tol", cc.tol, ctx);
  if (b.contains("T_grid")) cc.T_grid = need_list(b, "T_grid", ctx);
  cc.nodes_per_unit_time = opt_num(b, "nodes_per_unit_time", cc.nodes_per_unit_time, ctx);
  cc.min_nodes = opt_int(b, "min_nodes", cc.min_nodes, ctx);
  cc.max_nodes = opt_int(b, "max_nodes", cc.max_nodes, ctx);
  cc.starts = opt_int(b, "starts", cc.starts, ctx);
  cc.max_iters = opt_int(b, "max_iters", cc.max_iters, ctx);
  cc.grad_tol = opt_num(b, "grad_tol", cc.grad_tol, ctx);
  if (b.contains("epsilon")) cc.epsilon = need_num(b, "epsilon", ctx);
  cc.seed = seed;
  cc.threads = threads;
  if (!(cc.tol > 0)) throw InputError("cu: tol must be positive");
  double k_lo = need_num(b, "k_lo", ctx);
  double k_hi = need_num(b, "k_hi", ctx);

  CriticalValueEstimate est = estimate_cu(sys, k_lo, k_hi, cc);

  std::vector<std::vector<double>> rows;
  for (const SweepCell& c : est.sweeps) rows.push_back({c.k, c.T, c.loop_action, c.loop_energy});
  write_csv(out / "sweep.csv", "k,T,loop_action,loop_energy", rows);

  json res;
  res["k_lo"] = k_lo;
  res["k_hi"] = k_hi;
  res["lower"] = est.lower;
  res["upper"] = est.upper;
  res["width"] = est.upper - est.lower;
  res["conclusive_lower"] = est.conclusive_lower;
  res["epsilon"] = est.epsilon;
  json cells = json::array();
  for (const SweepCell& c : est.sweeps)
    cells.push_back({{"k", c.k},
                     {"T", c.T},
                     {"loop_action", c.loop_action},
                     {"loop_energy", c.loop_energy},
                     {"certified", c.certified}});
  res["sweeps"] = cells;
  json wits = json::array();
  for (const LoopWitness& w : est.witnesses)
    wits.push_back({{"k", w.k},
                    {"action", w.action},
                    {"nodes", static_cast<int>(w.path.nodes.size())}});
  res["witnesses"] = wits;
  std::printf("cu: bracket [%.12g, %.12g], width %.3g, lower %s\n", est.lower, est.upper,
              est.upper - est.lower, est.conclusive_lower ? "certified" : "not certified");
  return res;
}

json barrier_rows_json(const BarrierProfile& prof) {
  json rows = json::array();
  for (const BarrierRow& r : prof.rows)
    rows.push_back({{"T", r.T},
                    {"hT", finite_or_null(r.hT)},
                    {"hT_plus_cT", finite_or_null(r.hT_plus)},
                    {"ok", r.ok}});
  return rows;
}

json cmd_barrier(const LagrangianSystem& sys, const json& b, const fs::path& out,
                 std::uint64_t seed, int threads) {
  const char* ctx = "barrier";
  MinimizeConfig mc = minimize_from_block(b, seed, threads, ctx);
  ChartPoint x0{need_vec(b, "x0", sys.dim, ctx)};
  ChartPoint x1{need_vec(b, "x1", sys.dim, ctx)};
  double c = need_num(b, "c", ctx);
  std::vector<double> grid =
      b.contains("T_grid") ? need_list(b, "T_grid", ctx) : std::vector<double>{10, 20, 40, 80};
  double eps = opt_num(b, "eps_aubry", 0.05, ctx);

  BarrierProfile prof = barrier_profile(sys, x0, x1, c, grid, mc);

  std::vector<std::vector<double>> rows;
  for (const BarrierRow& r : prof.rows) rows.push_back({r.T, r.hT, r.hT_plus});
  write_csv(out / "barrier_profile.csv", "T,hT,hT_plus_cT", rows);

  json res;
  res["c"] = c;
  res["rows"] = barrier_rows_json(prof);
  res["liminf_proxy"] = finite_or_null(prof.liminf_proxy);
  res["fit_ok"] = prof.fit_ok;
  if (prof.fit_ok) {
    res["fit_a"] = prof.fit_a;
    res["fit_b"] = prof.fit_b;
  }
  if (std::isfinite(prof.liminf_proxy)) {
    AubryIndicator ai = aubry_indicator(prof, eps);
    res["aubry"] = ai.aubry;
    res["aubry_value"] = ai.value;
    res["aubry_eps"] = eps;
    std::printf("barrier: liminf proxy %.12g, fit a %.12g b %.12g, aubry %s\n", prof.liminf_proxy,
                prof.fit_a, prof.fit_b, ai.aubry ? "yes" : "no");
  } else {
    res["aubry"] = nullptr;
    std::printf("barrier: no duration in the tail succeeded\n");
  }
  return res;
}

json cmd_aubry_scan(const LagrangianSystem& sys, const json& b, const fs::path& out,
                    std::uint64_t seed, int threads) {
  const char* ctx = "aubry_scan";
  MinimizeConfig base_mc = minimize_from_block(b, seed, threads, ctx);
  const json& pts = need_key(b, "points", ctx);
  if (!pts.is_array() || pts.empty())
    throw InputError("aubry_scan: \"points\" must be a non-empty array of coordinate arrays");
  double c = need_num(b, "c", ctx);
  std::vector<double> grid =
      b.contains("T_grid") ? need_list(b, "T_grid", ctx) : std::vector<double>{10, 20, 40, 80};
  double eps = opt_num(b, "eps_aubry", 0.05, ctx);

  std::string header;
  for (int d = 0; d < sys.dim; ++d) header += "x" + std::to_string(d) + ",";
  header += "liminf,aubry";
  std::vector<std::vector<double>> rows;
  json list = json::array();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Vec x = vec_from_json(pts.at(i), "points", sys.dim, ctx);
    MinimizeConfig mc = base_mc;
    mc.seed = Rng(seed, {0xa0bULL, static_cast<std::uint64_t>(i)}).next_u64();
    json entry;
    entry["point"] = x.to_std();
    std::vector<double> row = x.to_std();
    try {
      BarrierProfile prof = barrier_profile(sys, ChartPoint{x}, ChartPoint{x}, c, grid, mc);
      AubryIndicator ai = aubry_indicator(prof, eps);
      entry["ok"] = true;
      entry["liminf_proxy"] = finite_or_null(prof.liminf_proxy);
      entry["value"] = ai.value;
      entry["aubry"] = ai.aubry;
      row.push_back(prof.liminf_proxy);
      row.push_back(ai.aubry ? 1.0 : 0.0);
    } catch (const NumericalError& e) {
      entry["ok"] = false;
      entry["error"] = e.what();
      row.push_back(std::nan(""));
      row.push_back(0.0);
    }
    list.push_back(entry);
    rows.push_back(std::move(row));
  }
  write_csv(out / "aubry.csv", header, rows);

  json res;
  res["c"] = c;
  res["eps_aubry"] = eps;
  res["points"] = list;
  std::printf("aubry-scan: %zu points scanned at c = %.12g\n", pts.size(), c);
  return res;
}

json cmd_measures(const LagrangianSystem& sys, const json& b, const fs::path& out,
                  std::uint64_t seed, int threads) {
  const char* ctx = "measures";
  std::string source = opt_str(b, "source", "", ctx);
  HolonomicMeasureSample sample;
  json res;
  if (source == "loop") {
    double T = need_num(b, "T", ctx);
    MinimizeConfig mc = minimize_from_block(b, seed, threads, ctx);
    MinimizeOutcome mo = minimize_closed_loop(sys, T, mc);
    sample = sample_from_path(sys, mo.path);
    res["loop_action"] = mo.report.action;
    res["loop_converged"] = mo.report.converged;
  } else if (source == "horocycle") {
    double pa = need_num(b, "p_alpha", ctx);
    double pb = need_num(b, "p_beta", ctx);
    double length = opt_num(b, "length", 20.0, ctx);
    IntegratorConfig ic = integrator_from_block(b, ctx);
    if (!b.contains("record_stride")) ic.record_stride = 5;
    HorocycleResult hr = horocycle_measure(sys, pa, pb, length, ic);
    sample = hr.sample;
    res["orbit_states"] = hr.orbit.states.size();
    res["max_energy_drift"] = hr.orbit.max_energy_drift;
    res["max_integral_drift"] = hr.orbit.max_integral_drift;
  } else {
    throw InputError("measures: \"source\" must be \"loop\" or \"horocycle\"");
  }

  if (b.contains("rescale")) {
    double lam = need_num(b, "rescale", ctx);
    sample = rescale_measure(sample, lam);
    res["rescale"] = lam;
  }

  StationarityCheck sc = stationarity_residual(sys, sample);
  res["source"] = sample.source;
  res["atoms"] = sample.atoms.size();
  res["integral_L"] = measure_integral_L(sys, sample);
  res["integral_E"] = measure_integral_E(sys, sample);
  res["stationarity_fd"] = sc.fd_derivative;
  res["stationarity_identity"] = sc.identity_value;
  res["stationarity_residual"] = sc.residual;
  if (b.contains("c")) {
    double c = need_num(b, "c", ctx);
    res["energy_gap"] = measure_energy_gap(sys, sample, c);
  }

  std::string header;
  for (int d = 0; d < sys.dim; ++d) header += "x" + std::to_string(d) + ",";
  for (int d = 0; d < sys.dim; ++d) header += "v" + std::to_string(d) + ",";
  header += "weight";
  std::vector<std::vector<double>> rows;
  for (const MeasureAtom& a : sample.atoms) {
    std::vector<double> row;
    for (int d = 0; d < sys.dim; ++d) row.push_back(a.state.base.coords[d]);
    for (int d = 0; d < sys.dim; ++d) row.push_back(a.state.velocity[d]);
    row.push_back(a.weight);
    rows.push_back(std::move(row));
  }
  write_csv(out / "atoms.csv", header, rows);
  std::printf("measures: %zu atoms, integral of L %.12g, stationarity residual %.3g\n",
              sample.atoms.size(), measure_integral_L(sys, sample), sc.residual);
  return res;
}

json cmd_symcheck(const LagrangianSystem& sys, const json& b, std::uint64_t seed, int threads) {
  const char* ctx = "symcheck";
  ExactSymplectomorphism m = map_from_json(need_key(b, "map", ctx), sys.dim, ctx);
  ExactSymplectomorphism minv = inverse(m);
  json res;
  res["map"] = m.name;

  // Inverse round trip and the primitive anti-symmetry S_m(X) + S_inv(m X) = 0
  // over sampled chart states.
  Rng rng(seed, {0x5cULL});
  double rt = 0, prim = 0;
  int accepted = 0;
  for (int tries = 0; tries < 400 && accepted < 32; ++tries) {
    Vec x(sys.dim), p(sys.dim);
    for (int d = 0; d < sys.dim; ++d) {
      x[d] = rng.uniform(sys.sample_lo[d], sys.sample_hi[d]);
      p[d] = rng.uniform(-1.0, 1.0);
    }
    if (!sys.chart_ok(x)) continue;
    CotangentState X{{x}, p};
    CotangentState Y = apply(m, X);
    if (!sys.chart_ok(Y.base.coords)) continue;
    ++accepted;
    rt = std::max(rt, phase_dist(apply(minv, Y), X));
    prim = std::max(prim, std::abs(primitive_value(m, X) + primitive_value(minv, Y)));
  }
  if (accepted == 0) throw NumericalError("symcheck: no sampled state stayed in the chart");
  res["sampled_states"] = accepted;
  res["inverse_roundtrip"] = rt;
  res["primitive_inverse_residual"] = prim;

  // Fiberwise convexity probe of the image system.
  LagrangianSystem mapped = mapped_system(sys, m);
  double cmin = std::numeric_limits<double>::infinity();
  int probes = 0;
  for (int tries = 0; tries < 400 && probes < 64; ++tries) {
    Vec x(mapped.dim), v(mapped.dim);
    for (int d = 0; d < mapped.dim; ++d) {
      x[d] = rng.uniform(mapped.sample_lo[d], mapped.sample_hi[d]);
      v[d] = rng.uniform(-2.0, 2.0);
    }
    if (!mapped.chart_ok(x)) continue;
    ++probes;
    cmin = std::min(cmin, convexity_min_eig(mapped, TangentState{{x}, v}));
  }
  res["mapped_convexity_min"] = finite_or_null(cmin);

  // Flow conjugation: integrating the image system from the mapped start must
  // land on the mapped endpoint of the source orbit.
  double T_flow = opt_num(b, "flow_T", 2.0, ctx);
  CotangentState X0 = b.contains("start") ? start_from_block(sys, b, ctx)
                                          : default_probe_state(sys);
  IntegratorConfig ic;
  ic.record_stride = 1000;
  OrbitSegment seg = integrate(sys, X0, T_flow, ic);
  OrbitSegment mseg = integrate(mapped, apply(m, X0), T_flow, ic);
  res["flow_conjugation_gap"] = phase_dist(apply(m, seg.back()), mseg.back());

  // Action identity on a closed reference orbit, when the system has one.
  if (sys.has_closed_orbit_states && sys.reference) {
    double k = opt_num(b, "k", 0.5 * (sys.reference->k_min + sys.reference->k_max), ctx);
    ReferenceOrbit ro = reference_orbit(sys, k);
    OrbitSegment orb = integrate(sys, reference_orbit_state(sys, k), ro.period, IntegratorConfig{});
    res["action_identity_k"] = k;
    res["action_identity_residual"] = action_identity_residual(sys, m, orb, k);
  }

  if (b.contains("transport")) {
    const json& tb = b.at("transport");
    if (!tb.is_object()) throw InputError("symcheck: \"transport\" must be an object");
    PhaseBarrierConfig pc;
    if (tb.contains("durations")) pc.durations = need_list(tb, "durations", ctx);
    pc.gap_cap = opt_num(tb, "gap_cap", pc.gap_cap, ctx);
    pc.energy_tol = opt_num(tb, "energy_tol", pc.energy_tol, ctx);
    pc.minimize = minimize_from_block(tb, seed, threads, ctx);
    double k = opt_num(tb, "k", 0.0, ctx);
    BarrierTransportCheck tc = barrier_transport_check(sys, m, X0, k, pc);
    res["transport"] = {{"k", k},
                        {"source_action", tc.source_action},
                        {"image_action", tc.image_action},
                        {"s_correction", tc.s_correction},
                        {"residual", tc.residual},
                        {"source_gap", tc.source_gap},
                        {"image_gap", tc.image_gap}};
  }

  if (b.contains("cu_check")) {
    const json& cb = b.at("cu_check");
    if (!cb.is_object()) throw InputError("symcheck: \"cu_check\" must be an object");
    CuConfig cc;
    cc.tol = opt_num(cb, "tol", 0.05, ctx);
    if (cb.contains("T_grid")) cc.T_grid = need_list(cb, "T_grid", ctx);
    cc.seed = seed;
    cc.threads = threads;
    double k_lo = need_num(cb, "k_lo", ctx);
    double k_hi = need_num(cb, "k_hi", ctx);
    CuInvarianceReport rep = cu_invariance_report(sys, m, k_lo, k_hi, cc);
    res["cu_check"] = {{"original", {rep.original.lower, rep.original.upper}},
                       {"mapped", {rep.mapped.lower, rep.mapped.upper}},
                       {"convexity_min", rep.convexity_min},
                       {"overlap", rep.overlap}};
  }

  std::printf("symcheck %s: roundtrip %.3g, primitive %.3g, conjugation %.3g\n", m.name.c_str(),
              rt, prim, res["flow_conjugation_gap"].get<double>());
  return res;
}

json cmd_verify(const LagrangianSystem& sys, const json& b, std::uint64_t seed, int threads,
                int& exit_code) {
  const char* ctx = "verify";
  AcceptanceConfig ac;
  ac.seed = seed;
  ac.threads = threads;
  std::vector<int> ids;
  if (b.contains("criteria")) {
    for (double v : need_list(b, "criteria", ctx)) {
      int id = static_cast<int>(v);
      if (id < 1 || id > 12) throw InputError(strf("verify: criterion ids are 1..12, got %d", id));
      ids.push_back(id);
    }
  } else {
    ids = criteria_for_system(sys.kind);
  }
  if (ids.empty()) throw InputError("verify: no criteria selected");

  json list = json::array();
  bool all = true;
  std::vector<int> failed;
  for (int id : ids) {
    CriterionResult r = run_criterion(id, ac, sys.kind);
    std::printf("[%s] %2d %s: %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                r.detail.c_str());
    std::fflush(stdout);
    if (!r.pass) failed.push_back(id);
    all = all && r.pass;
    list.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
  }
  if (!all) {
    std::string msg = "verification failed for criteria:";
    for (int id : failed) msg += strf(" %d", id);
    std::printf("%s\n", msg.c_str());
    exit_code = 3;
  } else {
    std::printf("all %zu criteria passed\n", ids.size());
  }
  json res;
  res["criteria"] = list;
  res["all_pass"] = all;
  return res;
}

// ---- summary / diagnostics ----

void write_summary(const fs::path& out, const std::string& command, const json& resolved,
                   const json& results) {
  json summary;
  summary["command"] = command;
  summary["build"] = "mane-lab/0.1.0";
  summary["config"] = resolved;
  summary["config_hash"] = strf("%016llx",
                                static_cast<unsigned long long>(fnv1a_hash(resolved.dump())));
  summary["seed"] = resolved.at("seed");
  summary["threads"] = resolved.at("threads");
  summary["results"] = results;
  fs::path p = out / "summary.json";
  std::ofstream f(p);
  if (!f) throw InputError("cannot open output file: " + p.string());
  f << summary.dump(2) << "\n";
  f.close();
  if (!f) throw InputError("failed while writing " + p.string());
}

void write_diagnostics(const fs::path& out, const std::string& command, const std::string& what) {
  try {
    json d;
    d["command"] = command;
    d["error"] = what;
    std::ofstream f(out / "diagnostics.json");
    if (f) f << d.dump(2) << "\n";
  } catch (...) {
    // Diagnostics are best effort; the exit code already signals the failure.
  }
}

json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw InputError(strf("config parse error in %s: %s", path.c_str(), e.what()));
  }
  if (!j.is_object()) throw InputError("config root must be a JSON object");
  return j;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"mane-lab: action minimizers, critical values, and barrier diagnostics\n"
               "for Tonelli Lagrangians on universal covers"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed_flag = 0;
  int threads_flag = 1;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"integrate", "integrate the Hamiltonian flow from a phase-space point"},
      {"minimize", "minimize the discrete action over fixed-endpoint paths or closed loops"},
      {"cu", "bracket the critical value of the lifted system by bisection"},
      {"barrier", "finite-time potentials along a duration grid, with asymptote fit"},
      {"aubry-scan", "diagonal barrier indicator over a set of base points"},
      {"measures", "holonomic measure diagnostics for loops and invariant orbits"},
      {"symcheck", "consistency checks for an exact symplectomorphism"},
      {"verify-paper", "run the built-in verification criteria for the configured system"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [nm, desc] : commands) {
    CLI::App* s = app.add_subcommand(nm, desc);
    s->add_option("--config", config_path, "JSON configuration file")->required();
    s->add_option("--out", out_dir, "output directory (default: current directory)");
    s->add_option("--seed", seed_flag, "seed override (beats the config value)");
    s->add_option("--threads", threads_flag, "worker thread override (beats the config value)");
    subs.push_back(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  CLI::App* sub = nullptr;
  for (CLI::App* s : subs)
    if (s->parsed()) sub = s;
  if (!sub) {
    std::fprintf(stderr, "error: no subcommand selected\n");
    return 1;
  }
  const std::string command = sub->get_name();
  fs::path out(out_dir);

  int code = 0;
  try {
    std::error_code ec;
    fs::create_directories(out, ec);

    json cfg = load_config(config_path);

    std::uint64_t seed = 0;
    if (sub->count("--seed")) {
      seed = seed_flag;
    } else if (cfg.contains("seed")) {
      if (!cfg.at("seed").is_number_integer())
        throw InputError("config: \"seed\" must be an integer");
      seed = cfg.at("seed").get<std::uint64_t>();
    }
    int threads = 1;
    if (sub->count("--threads")) {
      threads = threads_flag;
    } else if (cfg.contains("threads")) {
      if (!cfg.at("threads").is_number_integer())
        throw InputError("config: \"threads\" must be an integer");
      threads = cfg.at("threads").get<int>();
    } else if (const char* env = std::getenv("MANE_LAB_THREADS")) {
      threads = std::atoi(env);
    }
    if (threads < 1) throw InputError("threads must be at least 1");
    // The resolved values are folded back into the config before hashing, so
    // the summary records exactly what the run used.
    cfg["seed"] = seed;
    cfg["threads"] = threads;

    LagrangianSystem sys = system_from_config(cfg);

    std::string block_key = command;
    if (command == "aubry-scan") block_key = "aubry_scan";
    if (command == "verify-paper") block_key = "verify";
    json block = cfg.contains(block_key) ? cfg.at(block_key) : json::object();
    if (!block.is_object())
      throw InputError(strf("config: \"%s\" must be an object", block_key.c_str()));

    json results;
    if (command == "integrate")
      results = cmd_integrate(sys, block, out);
    else if (command == "minimize")
      results = cmd_minimize(sys, block, out, seed, threads);
    else if (command == "cu")
      results = cmd_cu(sys, block, out, seed, threads);
    else if (command == "barrier")
      results = cmd_barrier(sys, block, out, seed, threads);
    else if (command == "aubry-scan")
      results = cmd_aubry_scan(sys, block, out, seed, threads);
    else if (command == "measures")
      results = cmd_measures(sys, block, out, seed, threads);
    else if (command == "symcheck")
      results = cmd_symcheck(sys, block, seed, threads);
    else
      results = cmd_verify(sys, block, seed, threads, code);

    write_summary(out, command, cfg, results);
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    write_diagnostics(out, command, e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    write_diagnostics(out, command, e.what());
    return 2;
  }
  return code;
}

}  // namespace manelab
