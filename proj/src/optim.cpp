#include "prodspill/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "prodspill/rng.hpp"

namespace prodspill {

Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x, double fd_step) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd g(d);
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < d; ++i) {
    double h = fd_step * std::max(1.0, std::abs(x[i]));
    double orig = x[i];
    xp[i] = orig + h;
    double fp = f(xp);
    xp[i] = orig - h;
    double fm = f(xp);
    xp[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

OptimResult minimize_bfgs(const Objective& f, const Eigen::VectorXd& x0,
                          const OptimOptions& options) {
  const Eigen::Index d = x0.size();
  if (d == 0) throw std::invalid_argument("minimize_bfgs: empty parameter vector");

  OptimResult res;
  Eigen::VectorXd x = x0;
  double fx = f(x);
  if (!std::isfinite(fx)) {
    throw std::runtime_error("minimize_bfgs: objective not finite at the start point");
  }
  Eigen::VectorXd g = numeric_gradient(f, x, options.fd_step);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d);  // inverse-Hessian approximation

  bool grad_ok = g.lpNorm<Eigen::Infinity>() <= options.grad_tol * std::max(1.0, std::abs(fx));
  bool obj_ok = false;

  int iter = 0;
  for (; iter < options.max_iterations && !(grad_ok && obj_ok); ++iter) {
    Eigen::VectorXd p = -(H * g);
    double slope = g.dot(p);
    if (!(slope < 0.0)) {  // not a descent direction; reset to steepest descent
      H.setIdentity();
      p = -g;
      slope = g.dot(p);
      if (!(slope < 0.0)) break;  // gradient numerically zero
    }

    // Armijo backtracking.
    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int bt = 0; bt < 50; ++bt) {
      x_new = x + step * p;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no acceptable step along p

    Eigen::VectorXd g_new = numeric_gradient(f, x_new, options.fd_step);
    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd yv = g_new - g;
    double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      double rho = 1.0 / sy;
      Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
      H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) +
          rho * s * s.transpose();
    }

    obj_ok = (fx - f_new) <= options.rel_tol * std::max(1.0, std::abs(f_new));
    x = x_new;
    fx = f_new;
    g = g_new;
    grad_ok = g.lpNorm<Eigen::Infinity>() <= options.grad_tol * std::max(1.0, std::abs(fx));
  }

  res.x = x;
  res.value = fx;
  res.grad_norm = g.lpNorm<Eigen::Infinity>();
  res.iterations = iter;
  res.converged = grad_ok;
  return res;
}

OptimResult minimize_multistart(const Objective& f, const Eigen::VectorXd& x0,
                                double halfwidth, int n_starts, const OptimOptions& options) {
  OptimResult best = minimize_bfgs(f, x0, options);
  RngStream stream(0x9E3779B97F4A7C15ull, 0x5747u);
  const Eigen::Index d = x0.size();
  for (int s = 0; s < n_starts; ++s) {
    Eigen::VectorXd start(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      start[i] = x0[i] + stream.uniform(-halfwidth, halfwidth);
    }
    OptimResult candidate;
    try {
      candidate = minimize_bfgs(f, start, options);
    } catch (const std::exception&) {
      continue;  // start point outside the objective's domain
    }
    if (candidate.value < best.value) best = candidate;
  }
  return best;
}

}  // namespace prodspill
