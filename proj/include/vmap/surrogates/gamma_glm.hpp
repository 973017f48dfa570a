#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "vmap/types.hpp"

namespace vmap {

struct GlmOptions {
  int max_iter = 100;
  double tol = 1e-10;
};

inline constexpr Eigen::Index kGammaGlmTerms = 14;

/// Polynomial design row: 1, x1..x4, x3^2, x4^2, x3x1, x3x2, x4x1, x4x2, x4x3, x3^3, x4^3.
/// Only the thread count (x3) and frequency (x4) carry higher-order terms.
inline Eigen::RowVectorXd gamma_glm_design_row(const Eigen::VectorXd& x) {
  Eigen::RowVectorXd row(kGammaGlmTerms);
  const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3];
  row << 1.0, x1, x2, x3, x4, x3 * x3, x4 * x4, x3 * x1, x3 * x2, x4 * x1, x4 * x2, x4 * x3,
      x3 * x3 * x3, x4 * x4 * x4;
  return row;
}

inline Eigen::MatrixXd gamma_glm_design(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd design(x.rows(), kGammaGlmTerms);
  for (Eigen::Index i = 0; i < x.rows(); ++i) design.row(i) = gamma_glm_design_row(x.row(i).transpose());
  return design;
}

/// Gamma GLM with log link: E[y] = exp(design_row(x) * coefficients).
struct GammaGlmModel {
  Eigen::VectorXd coefficients;
  double dispersion = 1.0;
  int iterations = 0;
  std::vector<double> deviance_trace;

  double predict(const Eigen::VectorXd& x) const {
    return std::exp(gamma_glm_design_row(x).dot(coefficients));
  }
};

inline double gamma_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) dev += -std::log(y[i] / mu[i]) + (y[i] - mu[i]) / mu[i];
  return 2.0 * dev;
}

/// Iteratively reweighted least squares. With the log link and Gamma variance
/// the working weights are identically one, so a single QR of the design
/// serves every iteration.
inline GammaGlmModel fit_gamma_glm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const GlmOptions& options = {}) {
  const Eigen::Index n = x.rows();
  if (n == 0) throw Error("gamma GLM: no training data");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(y[i] > 0.0)) throw Error("gamma GLM: responses must be strictly positive");

  const Eigen::MatrixXd design = gamma_glm_design(x);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < kGammaGlmTerms)
    throw Error("gamma GLM: singular design (rank " + std::to_string(qr.rank()) + " < 14)");

  GammaGlmModel model;
  Eigen::VectorXd eta = y.array().log().matrix();
  Eigen::VectorXd mu = y;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(kGammaGlmTerms);
  double deviance = 0.0;

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Eigen::VectorXd z = eta.array() + (y - mu).array() / mu.array();
    Eigen::VectorXd candidate = qr.solve(z);
    Eigen::VectorXd eta_new = design * candidate;
    Eigen::VectorXd mu_new = eta_new.array().exp().matrix();
    double dev_new = gamma_deviance(y, mu_new);

    // Step halving keeps the deviance from rising after the first step.
    if (iter > 1) {
      for (int halving = 0; halving < 50 && (!std::isfinite(dev_new) || dev_new > deviance); ++halving) {
        candidate = 0.5 * (candidate + beta);
        eta_new = design * candidate;
        mu_new = eta_new.array().exp().matrix();
        dev_new = gamma_deviance(y, mu_new);
      }
    }
    if (!std::isfinite(dev_new)) throw Error("gamma GLM: IRLS diverged (non-finite deviance)");

    const double change = std::abs(dev_new - deviance) / (std::abs(dev_new) + 0.1);
    beta = candidate;
    eta = eta_new;
    mu = mu_new;
    deviance = dev_new;
    model.deviance_trace.push_back(deviance);
    model.iterations = iter;
    if (iter > 1 && change < options.tol) {
      model.coefficients = beta;
      const double dof = static_cast<double>(std::max<Eigen::Index>(n - kGammaGlmTerms, 1));
      const double pearson = ((y - mu).array() / mu.array()).square().sum() / dof;
      // A perfect fit has zero Pearson statistic; keep the dispersion positive.
      model.dispersion = std::max(pearson, std::numeric_limits<double>::min());
      return model;
    }
  }
  throw Error("gamma GLM: IRLS did not converge within " + std::to_string(options.max_iter) +
              " iterations");
}

}  // namespace vmap
