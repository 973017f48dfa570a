#pragma once

#include <Eigen/Dense>

#include "vmap/types.hpp"

namespace vmap {

/// Ordinary least squares with an intercept.
struct LinearModel {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;

  double predict(const Eigen::VectorXd& x) const { return intercept + coefficients.dot(x); }
};

inline LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n == 0) throw Error("linear model: no training data");
  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < p + 1)
    throw Error("linear model: singular design (rank " + std::to_string(qr.rank()) + " < " +
                std::to_string(p + 1) + ")");
  Eigen::VectorXd beta = qr.solve(y);
  if (!beta.allFinite()) throw Error("linear model: non-finite coefficients");
  return LinearModel{beta[0], beta.tail(p)};
}

}  // namespace vmap
