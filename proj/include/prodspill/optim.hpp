#pragma once

// Quasi-Newton minimization with central-difference numeric gradients and a
// deterministic multi-start wrapper.

#include <Eigen/Dense>

#include <functional>

namespace prodspill {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct OptimOptions {
  int max_iterations = 300;
  double rel_tol = 1e-10;   // relative objective decrease
  double grad_tol = 1e-7;   // infinity norm, relative to max(1, |objective|)
  double fd_step = 1e-6;    // central-difference step, relative to max(1, |x_i|)
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;  // infinity norm at the solution
  int iterations = 0;
  bool converged = false;
};

Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x, double fd_step);

// BFGS with Armijo backtracking from a single start.
OptimResult minimize_bfgs(const Objective& f, const Eigen::VectorXd& x0,
                          const OptimOptions& options = {});

// Runs BFGS from x0 and from n_starts points drawn uniformly over the box
// x0 +/- halfwidth (fixed internal stream, so results do not depend on the
// caller's RNG state); returns the best optimum, ties broken by the earliest
// start.
OptimResult minimize_multistart(const Objective& f, const Eigen::VectorXd& x0,
                                double halfwidth, int n_starts,
                                const OptimOptions& options = {});

}  // namespace prodspill
