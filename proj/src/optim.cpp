#include "manelab/optim.hpp"

#include <cmath>
#include <deque>

namespace manelab {

namespace {

double dotv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const std::vector<double>& a) {
  double s = 0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace

LbfgsResult lbfgs_minimize(std::vector<double> x0,
                           const std::function<double(const std::vector<double>&, std::vector<double>&)>& fn,
                           const LbfgsOptions& opts) {
  const std::size_t n = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);

  std::vector<double> g(n), gn(n), xn(n), q(n), diag;
  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;

  double f = fn(res.x, g);
  if (!std::isfinite(f)) {
    res.f = f;
    res.stop_reason = "start_inadmissible";
    return res;
  }

  if (opts.precond) {
    diag.assign(n, 1.0);
    opts.precond(res.x, diag);
  }

  double alpha_prev = 1.0;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    res.grad_inf = max_abs(g);
    if (res.grad_inf < opts.grad_tol) {
      res.converged = true;
      res.stop_reason = "grad_tol";
      break;
    }
    if (opts.early_stop && f < *opts.early_stop) {
      res.converged = true;
      res.stop_reason = "early_stop";
      break;
    }
    if (opts.precond && it > 0 && it % opts.precond_refresh == 0) opts.precond(res.x, diag);

    // two-loop recursion
    q = g;
    const int mme = static_cast<int>(S.size());
    std::vector<double> alpha_i(static_cast<std::size_t>(mme));
    for (int i = mme - 1; i >= 0; --i) {
      double a = rho[static_cast<std::size_t>(i)] * dotv(S[static_cast<std::size_t>(i)], q);
      alpha_i[static_cast<std::size_t>(i)] = a;
      const auto& y = Y[static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < n; ++j) q[j] -= a * y[j];
    }
    if (opts.precond) {
      for (std::size_t j = 0; j < n; ++j) q[j] *= diag[j];
    } else if (mme > 0) {
      double gamma = dotv(S.back(), Y.back()) / dotv(Y.back(), Y.back());
      for (std::size_t j = 0; j < n; ++j) q[j] *= gamma;
    }
    for (int i = 0; i < mme; ++i) {
      double b = rho[static_cast<std::size_t>(i)] * dotv(Y[static_cast<std::size_t>(i)], q);
      double a = alpha_i[static_cast<std::size_t>(i)];
      const auto& s = S[static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < n; ++j) q[j] += (a - b) * s[j];
    }

    // descent direction, falling back to scaled steepest descent
    double gTp = 0;
    for (std::size_t j = 0; j < n; ++j) gTp += g[j] * (-q[j]);
    if (!(gTp < 0)) {
      for (std::size_t j = 0; j < n; ++j) q[j] = g[j] * (opts.precond ? diag[j] : 1.0);
      gTp = 0;
      for (std::size_t j = 0; j < n; ++j) gTp += g[j] * (-q[j]);
      if (!(gTp < 0)) {
        res.stop_reason = "no_descent";
        break;
      }
    }

    // Armijo backtracking with warm-started trial step
    double alpha = std::min(1.0, 4 * alpha_prev);
    bool accepted = false;
    double fn_val = f;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      for (std::size_t j = 0; j < n; ++j) xn[j] = res.x[j] - alpha * q[j];
      fn_val = fn(xn, gn);
      if (std::isfinite(fn_val) && fn_val <= f + opts.armijo_c1 * alpha * gTp) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      res.stop_reason = "line_search";
      break;
    }
    alpha_prev = alpha;

    // curvature update
    std::vector<double> s_vec(n), y_vec(n);
    double sy = 0, ss = 0, yy = 0;
    for (std::size_t j = 0; j < n; ++j) {
      s_vec[j] = xn[j] - res.x[j];
      y_vec[j] = gn[j] - g[j];
      sy += s_vec[j] * y_vec[j];
      ss += s_vec[j] * s_vec[j];
      yy += y_vec[j] * y_vec[j];
    }
    if (sy > 1e-12 * std::sqrt(ss * yy)) {
      S.push_back(std::move(s_vec));
      Y.push_back(std::move(y_vec));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    res.x.swap(xn);
    g.swap(gn);
    f = fn_val;
  }

  if (res.stop_reason.empty()) res.stop_reason = "max_iters";
  res.f = f;
  res.grad_inf = max_abs(g);
  res.iterations = it;
  return res;
}

}  // namespace manelab
