#include "prodspill/linreg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace prodspill {

namespace {

void check_shapes(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const char* where) {
  if (X.rows() != y.size()) {
    throw std::invalid_argument(std::string(where) + ": row count mismatch");
  }
  if (X.rows() < X.cols()) {
    throw std::invalid_argument(std::string(where) + ": fewer rows than columns (" +
                                std::to_string(X.rows()) + " x " + std::to_string(X.cols()) +
                                ")");
  }
  if (X.cols() == 0) {
    throw std::invalid_argument(std::string(where) + ": empty design matrix");
  }
}

}  // namespace

Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  check_shapes(X, y, "solve_least_squares");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) {
    const auto& R = qr.matrixR();
    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
      double d = std::abs(R(i, i));
      dmax = std::max(dmax, d);
      dmin = std::min(dmin, d);
    }
    throw std::runtime_error(
        "solve_least_squares: rank-deficient design (rank " + std::to_string(qr.rank()) +
        " of " + std::to_string(X.cols()) + ", |R| diagonal range [" + std::to_string(dmin) +
        ", " + std::to_string(dmax) + "])");
  }
  return qr.solve(y);
}

RegressionResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  check_shapes(X, y, "ols");
  const Eigen::Index n = X.rows(), p = X.cols();
  RegressionResult r;
  r.coef = solve_least_squares(X, y);
  r.residuals = y - X * r.coef;

  Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();
  double s2 = r.residuals.squaredNorm() / static_cast<double>(n - p);
  r.se_classical = (s2 * xtx_inv.diagonal()).cwiseSqrt();

  // HC0 sandwich: (X'X)^{-1} X' diag(e^2) X (X'X)^{-1}.
  Eigen::MatrixXd meat = X.transpose() * r.residuals.array().square().matrix().asDiagonal() * X;
  Eigen::MatrixXd cov = xtx_inv * meat * xtx_inv;
  r.se_robust = cov.diagonal().cwiseSqrt();
  r.z = r.coef.array() / r.se_robust.array();
  return r;
}

RegressionResult iv_just_identified(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                                    const Eigen::VectorXd& y) {
  check_shapes(X, y, "iv_just_identified");
  if (Z.rows() != X.rows() || Z.cols() != X.cols()) {
    throw std::invalid_argument("iv_just_identified: instrument matrix must match design shape");
  }
  Eigen::MatrixXd ztx = Z.transpose() * X;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ztx);
  if (!lu.isInvertible()) {
    throw std::runtime_error("iv_just_identified: singular Z'X (weak or collinear instruments)");
  }
  RegressionResult r;
  r.coef = lu.solve(Z.transpose() * y);
  r.residuals = y - X * r.coef;

  Eigen::MatrixXd ztx_inv = lu.inverse();
  Eigen::MatrixXd meat = Z.transpose() * r.residuals.array().square().matrix().asDiagonal() * Z;
  Eigen::MatrixXd cov = ztx_inv * meat * ztx_inv.transpose();
  r.se_robust = cov.diagonal().cwiseSqrt();

  double s2 = r.residuals.squaredNorm() / static_cast<double>(X.rows() - X.cols());
  r.se_classical = (s2 * (ztx_inv * (Z.transpose() * Z) * ztx_inv.transpose()).diagonal())
                       .cwiseSqrt();
  r.z = r.coef.array() / r.se_robust.array();
  return r;
}

}  // namespace prodspill
