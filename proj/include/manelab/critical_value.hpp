#pragma once

#include "manelab/measures.hpp"
#include "manelab/variational.hpp"

namespace manelab {

struct CuConfig {
  std::vector<double> T_grid;  // defaults to {2*pi * 2^j, j = 0..7}
  double tol = 0.02;
  double nodes_per_unit_time = 8;
  int min_nodes = 160;
  int max_nodes = 1024;
  int starts = 6;
  int max_iters = 40000;
  double grad_tol = 1e-7;
  std::uint64_t seed = 0;
  int threads = 1;
  // Certification slack; when unset it is calibrated from the discretization
  // error of the closed-orbit family at the sweep resolution (floor 1e-4).
  std::optional<double> epsilon;
};

struct SweepCell {
  double k;
  double T;
  double loop_action;  // best discrete A_{L+k} found for loops of period T
  double loop_energy;  // time-averaged energy of that loop
  bool certified;      // loop_action < -epsilon
};

struct LoopWitness {
  double k;
  double action;  // A_{L+k}
  DiscretePath path;
};

// Bisection bracket for the critical value of the lifted system. The lower
// side is certified by explicit negative-action loops; the upper side is
// heuristic (absence of negative loops within the searched family).
struct CriticalValueEstimate {
  double lower;
  double upper;
  bool conclusive_lower;  // at least one bisection level was certified
  double epsilon;
  std::vector<SweepCell> sweeps;
  std::vector<LoopWitness> witnesses;
};

std::vector<double> default_cu_T_grid();

CriticalValueEstimate estimate_cu(const LagrangianSystem& sys, double k_lo, double k_hi,
                                  const CuConfig& cfg);

// |integral of E d(mu) - c| for a sampled measure.
double measure_energy_gap(const LagrangianSystem& sys, const HolonomicMeasureSample& m, double c);

}  // namespace manelab
