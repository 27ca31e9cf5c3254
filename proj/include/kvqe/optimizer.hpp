#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kvqe/common.hpp"

namespace kvqe {

struct OptimizerOptions {
  double gradient_tolerance = 1e-6; // infinity norm
  int max_evaluations = 2000;
  double c1 = 1e-4;
  double c2 = 0.9;
};

struct OptimizeResult {
  std::vector<double> x;
  double f = 0.0;
  std::vector<double> gradient;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

namespace detail {

struct LineSearchResult {
  bool ok = false;
  double alpha = 0.0;
  double f = 0.0;
  Eigen::VectorXd x, g;
};

/// Minimizer of the cubic through (a, fa, da) and (b, fb, db), clamped into
/// the safe interior of [a, b]; bisection when the cubic is unusable.
inline double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  double t = 0.5 * (a + b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double den = db - da + 2.0 * d2;
    if (den != 0.0)
      t = b - (b - a) * (db + d2 - d1) / den;
  }
  const double margin = 0.1 * (hi - lo);
  if (!(t > lo + margin && t < hi - margin))
    t = 0.5 * (a + b);
  return t;
}

} // namespace detail

/// Quasi-Newton minimization with BFGS inverse-Hessian updates and a
/// strong-Wolfe line search.
inline OptimizeResult bfgs(const Objective &fun, std::vector<double> x0, const OptimizerOptions &opt = {}) {
  using Eigen::VectorXd;
  const auto n = static_cast<Eigen::Index>(x0.size());
  OptimizeResult res;
  int evals = 0;

  auto eval = [&](const VectorXd &x, VectorXd &g) {
    g.resize(n);
    ++evals;
    const double f = fun(std::span<const double>(x.data(), static_cast<std::size_t>(n)),
                         std::span<double>(g.data(), static_cast<std::size_t>(n)));
    if (!std::isfinite(f))
      throw NumericalError("objective returned a non-finite value");
    return f;
  };

  VectorXd x = Eigen::Map<const VectorXd>(x0.data(), n);
  VectorXd g;
  double f = eval(x, g);
  auto finish = [&](bool converged, std::string msg) {
    res.x.assign(x.data(), x.data() + n);
    res.f = f;
    res.gradient.assign(g.data(), g.data() + n);
    res.evaluations = evals;
    res.converged = converged;
    res.message = std::move(msg);
    return res;
  };
  if (n == 0)
    return finish(true, "no parameters");

  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;
  for (int it = 0;; ++it) {
    res.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance)
      return finish(true, "gradient tolerance reached");
    if (evals >= opt.max_evaluations)
      return finish(false, "evaluation budget exhausted");

    VectorXd p = -hinv * g;
    double d0 = g.dot(p);
    if (!(d0 < 0.0)) {
      hinv.setIdentity();
      fresh = true;
      p = -g;
      d0 = g.dot(p);
    }

    // Strong-Wolfe line search (bracketing phase followed by zoom).
    detail::LineSearchResult ls;
    {
      auto phi = [&](double a, VectorXd &xa, VectorXd &ga, double &da) {
        xa = x + a * p;
        const double fa = eval(xa, ga);
        da = ga.dot(p);
        return fa;
      };
      double a_prev = 0.0, f_prev = f, d_prev = d0;
      double a = fresh ? std::min(1.0, 1.0 / std::max(1e-12, g.lpNorm<Eigen::Infinity>())) : 1.0;
      VectorXd xa, ga;
      auto zoom = [&](double lo, double flo, double dlo, double hi, double fhi, double dhi) {
        for (int j = 0; j < 40 && evals < opt.max_evaluations; ++j) {
          const double aj = detail::cubic_step(lo, flo, dlo, hi, fhi, dhi);
          double dj;
          const double fj = phi(aj, xa, ga, dj);
          if (fj > f + opt.c1 * aj * d0 || fj >= flo) {
            hi = aj, fhi = fj, dhi = dj;
          } else {
            if (std::abs(dj) <= -opt.c2 * d0) {
              ls = {true, aj, fj, xa, ga};
              return;
            }
            if (dj * (hi - lo) >= 0.0)
              hi = lo, fhi = flo, dhi = dlo;
            lo = aj, flo = fj, dlo = dj;
          }
          if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo)))
            break;
        }
        // Accept the best sufficient-decrease point if the curvature test
        // could not be met.
        if (lo > 0.0 && flo < f) {
          VectorXd xl = x + lo * p, gl;
          const double fl = eval(xl, gl);
          ls = {true, lo, fl, xl, gl};
        }
      };
      for (int i = 0; i < 60 && evals < opt.max_evaluations; ++i) {
        double da;
        const double fa = phi(a, xa, ga, da);
        if (fa > f + opt.c1 * a * d0 || (i > 0 && fa >= f_prev)) {
          zoom(a_prev, f_prev, d_prev, a, fa, da);
          break;
        }
        if (std::abs(da) <= -opt.c2 * d0) {
          ls = {true, a, fa, xa, ga};
          break;
        }
        if (da >= 0.0) {
          zoom(a, fa, da, a_prev, f_prev, d_prev);
          break;
        }
        a_prev = a, f_prev = fa, d_prev = da;
        a = std::min(2.0 * a, 1e6);
      }
    }

    if (!ls.ok) {
      if (!fresh) {
        hinv.setIdentity();
        fresh = true;
        continue;
      }
      return finish(false, "line search failed");
    }

    const VectorXd s = ls.x - x;
    const VectorXd y = ls.g - g;
    x = ls.x;
    g = ls.g;
    f = ls.f;
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (fresh)
        hinv *= sy / y.dot(y);
      const double rho = 1.0 / sy;
      const VectorXd hy = hinv * y;
      hinv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
      fresh = false;
    }
  }
}

/// Central finite-difference gradient.
inline void central_difference(const std::function<double(std::span<const double>)> &f, std::span<const double> x,
                               std::span<double> grad, double step = 1e-5) {
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + step;
    const double fp = f(xp);
    xp[i] = x[i] - step;
    const double fm = f(xp);
    xp[i] = x[i];
    grad[i] = (fp - fm) / (2.0 * step);
  }
}

} // namespace kvqe
