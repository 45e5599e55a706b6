#pragma once

// Linear least squares, OLS with classical and heteroskedasticity-robust
// standard errors, and just-identified instrumental variables.

#include <Eigen/Dense>

namespace prodspill {

// Coefficients minimizing ||y - X b||^2 via column-pivoted QR. Throws when X
// is rank-deficient, reporting rank and R-diagonal condition diagnostics.
Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct RegressionResult {
  Eigen::VectorXd coef;
  Eigen::VectorXd se_classical;  // homoskedastic
  Eigen::VectorXd se_robust;     // sandwich
  Eigen::VectorXd z;             // coef / se_robust
  Eigen::VectorXd residuals;
};

RegressionResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Two-stage least squares with exactly one instrument per regressor:
// b = (Z'X)^{-1} Z'y with sandwich covariance over the instruments.
RegressionResult iv_just_identified(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                                    const Eigen::VectorXd& y);

}  // namespace prodspill
