#include "manelab/geometry.hpp"

#include <algorithm>

namespace manelab {

CotangentState legendre_forward(const LagrangianSystem& sys, const TangentState& s) {
  return {s.base, sys.dLdv(s.base.coords, s.velocity)};
}

Vec solve_dense(std::vector<double> A, Vec b) {
  const int n = b.n;
  std::vector<int> piv(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) piv[static_cast<std::size_t>(i)] = i;
  auto at = [&](int r, int c) -> double& { return A[static_cast<std::size_t>(r * n + c)]; };
  for (int col = 0; col < n; ++col) {
    int best = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(at(r, col)) > std::abs(at(best, col))) best = r;
    if (std::abs(at(best, col)) < 1e-300) throw NumericalError("singular linear system");
    if (best != col) {
      for (int c = 0; c < n; ++c) std::swap(at(best, c), at(col, c));
      std::swap(b[best], b[col]);
    }
    for (int r = col + 1; r < n; ++r) {
      double f = at(r, col) / at(col, col);
      if (f == 0) continue;
      for (int c = col; c < n; ++c) at(r, c) -= f * at(col, c);
      b[r] -= f * b[col];
    }
  }
  Vec x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= at(r, c) * x[c];
    x[r] = s / at(r, r);
  }
  return x;
}

TangentState legendre_inverse(const LagrangianSystem& sys, const CotangentState& s) {
  const int n = s.base.coords.n;
  const double scale = std::max(1.0, norm_inf(s.momentum));
  Vec v = Vec::zeros(n);
  for (int iter = 0; iter < 50; ++iter) {
    Vec res = sys.dLdv(s.base.coords, v) - s.momentum;
    if (norm_inf(res) <= 1e-12 * scale) return {s.base, v};
    // finite-difference Jacobian of dL/dv in v
    std::vector<double> J(static_cast<std::size_t>(n * n));
    for (int c = 0; c < n; ++c) {
      double step = 1e-6 * std::max(1.0, std::abs(v[c]));
      Vec vp = v, vm = v;
      vp[c] += step;
      vm[c] -= step;
      Vec gp = sys.dLdv(s.base.coords, vp);
      Vec gm = sys.dLdv(s.base.coords, vm);
      for (int r = 0; r < n; ++r)
        J[static_cast<std::size_t>(r * n + c)] = (gp[r] - gm[r]) / (2 * step);
    }
    Vec dv = solve_dense(std::move(J), res);
    // damped update: halve until the residual does not blow up
    double t = 1.0;
    double res0 = norm_inf(res);
    for (int back = 0; back < 30; ++back) {
      Vec vt = v - t * dv;
      Vec rt = sys.dLdv(s.base.coords, vt) - s.momentum;
      if (all_finite(rt) && norm_inf(rt) < res0) {
        v = vt;
        break;
      }
      t *= 0.5;
      if (back == 29) throw NumericalError("legendre_inverse: Newton step failed to reduce residual");
    }
  }
  Vec res = sys.dLdv(s.base.coords, v) - s.momentum;
  if (norm_inf(res) <= 1e-10 * scale) return {s.base, v};
  throw NumericalError("legendre_inverse: no convergence in 50 Newton iterations");
}

double energy(const LagrangianSystem& sys, const TangentState& s) {
  return dot(sys.dLdv(s.base.coords, s.velocity), s.velocity) -
         sys.lagrangian(s.base.coords, s.velocity);
}

double fenchel_residual(const LagrangianSystem& sys, const TangentState& s) {
  Vec p = sys.dLdv(s.base.coords, s.velocity);
  double lhs = sys.hamiltonian(s.base.coords, p);
  double rhs = dot(p, s.velocity) - sys.lagrangian(s.base.coords, s.velocity);
  return std::abs(lhs - rhs);
}

double hamiltonian_field_residual(const LagrangianSystem& sys, const CotangentState& s) {
  const int n = s.base.coords.n;
  Vec dx(n), dp(n);
  sys.ham_vector_field(s.base.coords, s.momentum, dx, dp);
  double worst = 0;
  for (int i = 0; i < n; ++i) {
    double hp = 1e-6 * std::max(1.0, std::abs(s.momentum[i]));
    Vec pp = s.momentum, pm = s.momentum;
    pp[i] += hp;
    pm[i] -= hp;
    double dHdp = (sys.hamiltonian(s.base.coords, pp) - sys.hamiltonian(s.base.coords, pm)) / (2 * hp);
    worst = std::max(worst, std::abs(dx[i] - dHdp));

    double hx = 1e-6 * std::max(1.0, std::abs(s.base.coords[i]));
    Vec xp = s.base.coords, xm = s.base.coords;
    xp[i] += hx;
    xm[i] -= hx;
    double dHdx = (sys.hamiltonian(xp, s.momentum) - sys.hamiltonian(xm, s.momentum)) / (2 * hx);
    worst = std::max(worst, std::abs(dp[i] + dHdx));
  }
  return worst;
}

namespace {

// Jacobi eigenvalue sweep for a small symmetric matrix.
double min_eig_sym(std::vector<double> M, int n) {
  auto at = [&](int r, int c) -> double& { return M[static_cast<std::size_t>(r * n + c)]; };
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (int r = 0; r < n; ++r)
      for (int c = r + 1; c < n; ++c) off += at(r, c) * at(r, c);
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(at(p, q)) < 1e-300) continue;
        double theta = (at(q, q) - at(p, p)) / (2 * at(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        double c = 1.0 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < n; ++k) {
          double mkp = at(k, p), mkq = at(k, q);
          at(k, p) = c * mkp - s * mkq;
          at(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          double mpk = at(p, k), mqk = at(q, k);
          at(p, k) = c * mpk - s * mqk;
          at(q, k) = s * mpk + c * mqk;
        }
      }
  }
  double m = at(0, 0);
  for (int i = 1; i < n; ++i) m = std::min(m, at(i, i));
  return m;
}

}  // namespace

double convexity_min_eig(const LagrangianSystem& sys, const TangentState& s) {
  const int n = s.base.coords.n;
  const Vec& x = s.base.coords;
  const double step = 1e-4;
  std::vector<double> Hs(static_cast<std::size_t>(n * n));
  double f0 = sys.lagrangian(x, s.velocity);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double hij;
      if (i == j) {
        Vec vp = s.velocity, vm = s.velocity;
        vp[i] += step;
        vm[i] -= step;
        hij = (sys.lagrangian(x, vp) - 2 * f0 + sys.lagrangian(x, vm)) / (step * step);
      } else {
        Vec vpp = s.velocity, vpm = s.velocity, vmp = s.velocity, vmm = s.velocity;
        vpp[i] += step; vpp[j] += step;
        vpm[i] += step; vpm[j] -= step;
        vmp[i] -= step; vmp[j] += step;
        vmm[i] -= step; vmm[j] -= step;
        hij = (sys.lagrangian(x, vpp) - sys.lagrangian(x, vpm) - sys.lagrangian(x, vmp) +
               sys.lagrangian(x, vmm)) /
              (4 * step * step);
      }
      Hs[static_cast<std::size_t>(i * n + j)] = hij;
      Hs[static_cast<std::size_t>(j * n + i)] = hij;
    }
  }
  return min_eig_sym(std::move(Hs), n);
}

Vec d2Ldv2_diag(const LagrangianSystem& sys, const Vec& x, const Vec& v) {
  const int n = x.n;
  const double step = 1e-3;
  Vec out(n);
  double f0 = sys.lagrangian(x, v);
  for (int i = 0; i < n; ++i) {
    Vec vp = v, vm = v;
    vp[i] += step;
    vm[i] -= step;
    out[i] = (sys.lagrangian(x, vp) - 2 * f0 + sys.lagrangian(x, vm)) / (step * step);
  }
  return out;
}

}  // namespace manelab
