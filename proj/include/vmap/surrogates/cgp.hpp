#pragma once

// Gaussian process with two qualitative factors (host and VM IO scheduler).
//
// cov(i, j) = sigma^2 * exp(-sum_k theta_k (x_ik - x_jk)^2)
//                     * tau_io[z_io_i][z_io_j] * tau_vm[z_vm_i][z_vm_j]
//
// Each 3x3 tau is a unit-diagonal correlation matrix built as L L' where the
// rows of L are unit vectors in hyperspherical coordinates, so any angle
// vector yields a positive semi-definite matrix. mu and sigma^2 are profiled
// out of the likelihood; theta (on log scale) and the six angles are found
// by multi-start Nelder-Mead.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "vmap/types.hpp"

namespace vmap {

struct CgpOptions {
  int restarts = 10;
  std::uint64_t seed = 20190723;
  double nugget = 1e-8;         // initial nugget, relative to sigma^2
  double max_nugget = 1e-2;
  int max_iterations = 300;     // Nelder-Mead iterations per restart
};

inline constexpr int kCgpAngles = 3;
inline constexpr int kCgpParameters = static_cast<int>(kDims) + 2 * kCgpAngles;

/// Unit-diagonal 3x3 correlation matrix from three hyperspherical angles.
inline Eigen::Matrix3d hypersphere_correlation(double a1, double a2, double a3) {
  Eigen::Matrix3d l = Eigen::Matrix3d::Zero();
  l(0, 0) = 1.0;
  l(1, 0) = std::cos(a1);
  l(1, 1) = std::sin(a1);
  l(2, 0) = std::cos(a2);
  l(2, 1) = std::sin(a2) * std::cos(a3);
  l(2, 2) = std::sin(a2) * std::sin(a3);
  return l * l.transpose();
}

struct CgpModel {
  Eigen::MatrixXd x;
  std::vector<int> io_level;
  std::vector<int> vm_level;

  double mu = 0.0;
  double sigma2 = 1.0;
  Eigen::VectorXd theta;
  Eigen::Matrix3d tau_io = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d tau_vm = Eigen::Matrix3d::Identity();
  double nugget_ratio = 1e-8;   // nugget / sigma^2 actually used
  Eigen::VectorXd alpha;        // (R + g I)^{-1} (y - mu)

  double log_likelihood = -std::numeric_limits<double>::infinity();
  std::vector<double> restart_start_log_likelihood;
  std::vector<double> restart_final_log_likelihood;

  double correlation(const Eigen::VectorXd& a, int a_io, int a_vm, const Eigen::VectorXd& b, int b_io,
                     int b_vm) const {
    double s = 0.0;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      const double d = a[k] - b[k];
      s += theta[k] * d * d;
    }
    return std::exp(-s) * tau_io(a_io, b_io) * tau_vm(a_vm, b_vm);
  }

  /// Covariance between training inputs i and j, excluding the nugget.
  double covariance(Eigen::Index i, Eigen::Index j) const {
    return sigma2 * correlation(x.row(i).transpose(), io_level[static_cast<std::size_t>(i)],
                                vm_level[static_cast<std::size_t>(i)], x.row(j).transpose(),
                                io_level[static_cast<std::size_t>(j)], vm_level[static_cast<std::size_t>(j)]);
  }

  /// Training covariance including the nugget on the diagonal.
  Eigen::MatrixXd training_covariance() const {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) k(i, j) = k(j, i) = covariance(i, j);
    k.diagonal().array() += nugget_ratio * sigma2;
    return k;
  }

  /// Kriging mean. The nugget is a microscale (nugget-effect) term of the
  /// kernel, so a query identical to a training input reproduces its response.
  double predict(const Eigen::VectorXd& point, int io, int vm) const {
    double v = mu;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int i_io = io_level[static_cast<std::size_t>(i)];
      const int i_vm = vm_level[static_cast<std::size_t>(i)];
      double r = correlation(point, io, vm, x.row(i).transpose(), i_io, i_vm);
      if (io == i_io && vm == i_vm && point == x.row(i).transpose()) r += nugget_ratio;
      v += alpha[i] * r;
    }
    return v;
  }
};

namespace detail {

struct CgpLikelihood {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  const std::vector<int>& io;
  const std::vector<int>& vm;
  const CgpOptions& options;

  struct Evaluation {
    double log_likelihood = -std::numeric_limits<double>::infinity();
    double mu = 0.0;
    double sigma2 = 0.0;
    double nugget_ratio = 0.0;
    Eigen::VectorXd alpha;
  };

  // params: log theta (4), io angles (3), vm angles (3)
  void unpack(const double* params, Eigen::VectorXd& theta, Eigen::Matrix3d& tau_io,
              Eigen::Matrix3d& tau_vm) const {
    theta.resize(x.cols());
    for (Eigen::Index k = 0; k < x.cols(); ++k) theta[k] = std::exp(params[k]);
    const double* a = params + x.cols();
    tau_io = hypersphere_correlation(a[0], a[1], a[2]);
    tau_vm = hypersphere_correlation(a[3], a[4], a[5]);
  }

  Eigen::MatrixXd correlation_matrix(const Eigen::VectorXd& theta, const Eigen::Matrix3d& tau_io,
                                     const Eigen::Matrix3d& tau_vm) const {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd r(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      r(i, i) = tau_io(io[static_cast<std::size_t>(i)], io[static_cast<std::size_t>(i)]) *
                tau_vm(vm[static_cast<std::size_t>(i)], vm[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j < i; ++j) {
        double s = 0.0;
        for (Eigen::Index k = 0; k < x.cols(); ++k) {
          const double d = x(i, k) - x(j, k);
          s += theta[k] * d * d;
        }
        r(i, j) = r(j, i) = std::exp(-s) * tau_io(io[static_cast<std::size_t>(i)], io[static_cast<std::size_t>(j)]) *
                            tau_vm(vm[static_cast<std::size_t>(i)], vm[static_cast<std::size_t>(j)]);
      }
    }
    return r;
  }

  Evaluation evaluate(const double* params, bool keep_alpha = false) const {
    Evaluation out;
    Eigen::VectorXd theta;
    Eigen::Matrix3d tau_io, tau_vm;
    unpack(params, theta, tau_io, tau_vm);
    if (!theta.allFinite()) return out;
    const Eigen::MatrixXd r = correlation_matrix(theta, tau_io, tau_vm);
    const Eigen::Index n = x.rows();
    const double nd = static_cast<double>(n);

    for (double g = options.nugget; g <= options.max_nugget * (1.0 + 1e-12); g *= 10.0) {
      Eigen::MatrixXd rg = r;
      rg.diagonal().array() += g;
      Eigen::LLT<Eigen::MatrixXd> llt(rg);
      if (llt.info() != Eigen::Success) continue;
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
      const Eigen::VectorXd r_inv_one = llt.solve(ones);
      const Eigen::VectorXd r_inv_y = llt.solve(y);
      const double denom = ones.dot(r_inv_one);
      if (!(denom > 0.0) || !std::isfinite(denom)) continue;
      const double mu = ones.dot(r_inv_y) / denom;
      const Eigen::VectorXd alpha = r_inv_y - mu * r_inv_one;
      const double sigma2 = (y - mu * ones).dot(alpha) / nd;
      if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) continue;
      double log_det = 0.0;
      const auto& l = llt.matrixLLT();
      for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(l(i, i));
      const double ll = -0.5 * (nd * std::log(sigma2) + log_det + nd * (1.0 + std::log(2.0 * std::numbers::pi)));
      if (!std::isfinite(ll)) continue;
      out.log_likelihood = ll;
      out.mu = mu;
      out.sigma2 = sigma2;
      out.nugget_ratio = g;
      if (keep_alpha) out.alpha = alpha;
      return out;
    }
    return out;
  }
};

struct GslMinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* s) const { gsl_multimin_fminimizer_free(s); }
};
struct GslVectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

inline double cgp_negative_log_likelihood(const gsl_vector* v, void* ctx) {
  const auto* lik = static_cast<const CgpLikelihood*>(ctx);
  const double ll = lik->evaluate(v->data).log_likelihood;
  return std::isfinite(ll) ? -ll : 1e300;
}

}  // namespace detail

/// Maximum-likelihood fit over all scheduler combinations of one IO mode.
/// Deterministic for a given seed.
inline CgpModel fit_cgp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& io_level,
                        const std::vector<int>& vm_level, const CgpOptions& options = {}) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n < 2) throw Error("CGP: need at least two training points");
  if (p != static_cast<Eigen::Index>(kDims)) throw Error("CGP: expected four continuous inputs");
  if (options.restarts < 1) throw Error("CGP: restarts must be at least 1");
  if (!(options.nugget > 0.0) || options.nugget > options.max_nugget)
    throw Error("CGP: nugget must be positive and not above the escalation cap");
  for (std::size_t i = 0; i < io_level.size(); ++i)
    if (io_level[i] < 0 || io_level[i] > 2 || vm_level[i] < 0 || vm_level[i] > 2)
      throw Error("CGP: scheduler level out of range");

  gsl_set_error_handler_off();
  detail::CgpLikelihood lik{x, y, io_level, vm_level, options};

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd range(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    range[k] = x.col(k).maxCoeff() - x.col(k).minCoeff();
    if (!(range[k] > 0.0)) range[k] = 1.0;
  }

  CgpModel model;
  std::vector<double> best(static_cast<std::size_t>(kCgpParameters));
  double best_ll = -std::numeric_limits<double>::infinity();

  gsl_multimin_function fn;
  fn.n = static_cast<std::size_t>(kCgpParameters);
  fn.f = &detail::cgp_negative_log_likelihood;
  fn.params = &lik;

  for (int restart = 0; restart < options.restarts; ++restart) {
    std::unique_ptr<gsl_vector, detail::GslVectorDeleter> start(gsl_vector_alloc(fn.n));
    std::unique_ptr<gsl_vector, detail::GslVectorDeleter> step(gsl_vector_alloc(fn.n));
    // theta log-uniform over [0.1, 10] / range^2; angles uniform in (0, pi).
    for (Eigen::Index k = 0; k < p; ++k) {
      const double lo = std::log(0.1 / (range[k] * range[k]));
      const double hi = std::log(10.0 / (range[k] * range[k]));
      gsl_vector_set(start.get(), static_cast<std::size_t>(k), lo + (hi - lo) * unit(rng));
      gsl_vector_set(step.get(), static_cast<std::size_t>(k), 1.0);
    }
    for (int a = 0; a < 2 * kCgpAngles; ++a) {
      gsl_vector_set(start.get(), static_cast<std::size_t>(p + a), std::numbers::pi * (0.05 + 0.9 * unit(rng)));
      gsl_vector_set(step.get(), static_cast<std::size_t>(p + a), 0.3);
    }

    const double start_ll = lik.evaluate(start->data).log_likelihood;
    model.restart_start_log_likelihood.push_back(start_ll);
    if (!std::isfinite(start_ll)) {
      model.restart_final_log_likelihood.push_back(start_ll);
      continue;
    }

    std::unique_ptr<gsl_multimin_fminimizer, detail::GslMinimizerDeleter> nm(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, fn.n));
    gsl_multimin_fminimizer_set(nm.get(), &fn, start.get(), step.get());
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      if (gsl_multimin_fminimizer_iterate(nm.get()) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(nm.get()), 1e-5) == GSL_SUCCESS) break;
    }
    const gsl_vector* found = gsl_multimin_fminimizer_x(nm.get());
    double ll = lik.evaluate(found->data).log_likelihood;
    const double* params = found->data;
    if (!(ll >= start_ll)) {
      ll = start_ll;
      params = start->data;
    }
    model.restart_final_log_likelihood.push_back(ll);
    if (ll > best_ll) {
      best_ll = ll;
      std::copy(params, params + fn.n, best.begin());
    }
  }
  if (!std::isfinite(best_ll)) throw Error("CGP: likelihood is non-finite at every restart");

  const auto final = lik.evaluate(best.data(), /*keep_alpha=*/true);
  if (!std::isfinite(final.log_likelihood))
    throw Error("CGP: covariance factorization failed even after nugget escalation");
  model.x = x;
  model.io_level = io_level;
  model.vm_level = vm_level;
  lik.unpack(best.data(), model.theta, model.tau_io, model.tau_vm);
  model.mu = final.mu;
  model.sigma2 = final.sigma2;
  model.nugget_ratio = final.nugget_ratio;
  model.alpha = final.alpha;
  model.log_likelihood = final.log_likelihood;
  return model;
}

}  // namespace vmap
