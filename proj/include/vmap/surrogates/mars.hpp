#pragma once

// Multivariate adaptive regression splines.
//
// Forward pass: starting from the constant basis, repeatedly add the reflected
// hinge pair parent * (x_j - t)+, parent * (t - x_j)+ that most reduces the
// residual sum of squares. Candidate columns are orthogonalised against the
// current basis span, so scoring a candidate costs O(n * M) instead of a full
// refit.
//
// Backward pass: delete one basis at a time, each step keeping the deletion
// with the lowest GCV; the model returned is the GCV minimiser over every
// subset evaluated.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vmap/types.hpp"

namespace vmap {

struct MarsOptions {
  int max_order = 3;
  int max_bases = 0;  // 0 selects ceil(2 * sqrt(min(n, 200)))
  double gcv_penalty = 3.0;
};

inline int mars_default_max_bases(Eigen::Index n) {
  return static_cast<int>(std::ceil(2.0 * std::sqrt(static_cast<double>(std::min<Eigen::Index>(n, 200)))));
}

struct HingeFactor {
  int variable = 0;
  double knot = 0.0;
  int sign = 1;  // +1: (x - t)+, -1: (t - x)+

  double operator()(const Eigen::VectorXd& x) const {
    return std::max(0.0, sign * (x[variable] - knot));
  }
  bool operator==(const HingeFactor&) const = default;
};

/// Product of hinge factors; empty means the constant basis.
struct MarsBasis {
  std::vector<HingeFactor> factors;
  int pair_id = -1;  // forward step that created the basis; -1 for the intercept

  double operator()(const Eigen::VectorXd& x) const {
    double v = 1.0;
    for (const auto& f : factors) {
      v *= f(x);
      if (v == 0.0) break;
    }
    return v;
  }

  int order() const { return static_cast<int>(factors.size()); }

  bool uses(int variable) const {
    return std::any_of(factors.begin(), factors.end(),
                       [&](const HingeFactor& f) { return f.variable == variable; });
  }
};

struct MarsModel {
  std::vector<MarsBasis> bases;  // bases[0] is the intercept
  Eigen::VectorXd coefficients;
  double gcv = 0.0;

  // Fit diagnostics.
  std::vector<double> forward_rss;    // RSS after each forward step, starting with the constant model
  std::vector<double> backward_gcv;   // GCV of every subset evaluated in the backward pass

  double predict(const Eigen::VectorXd& x) const {
    double v = 0.0;
    for (std::size_t l = 0; l < bases.size(); ++l) v += coefficients[static_cast<Eigen::Index>(l)] * bases[l](x);
    return v;
  }
};

namespace detail {

// Orthonormal basis of the current model span, grown one column at a time.
class OrthoBasis {
 public:
  Eigen::Index size() const { return static_cast<Eigen::Index>(cols_.size()); }

  /// Component of v orthogonal to the span (two Gram-Schmidt sweeps).
  Eigen::VectorXd residual(Eigen::VectorXd v) const {
    for (int sweep = 0; sweep < 2; ++sweep)
      for (const auto& q : cols_) v -= q.dot(v) * q;
    return v;
  }

  /// Adds v if it is not (numerically) inside the span. Returns the unit vector added.
  bool add(const Eigen::VectorXd& v, Eigen::VectorXd* added = nullptr) {
    const double scale = v.norm();
    if (scale == 0.0) return false;
    Eigen::VectorXd r = residual(v);
    const double norm = r.norm();
    if (norm <= 1e-10 * scale) return false;
    cols_.push_back(r / norm);
    if (added) *added = cols_.back();
    return true;
  }

 private:
  std::vector<Eigen::VectorXd> cols_;
};

struct LeastSquaresFit {
  Eigen::VectorXd beta;
  double rss = 0.0;
};

inline LeastSquaresFit least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  LeastSquaresFit fit;
  fit.beta = qr.solve(y);
  // Redundant columns get zero coefficients from the pivoted solve.
  for (Eigen::Index k = 0; k < fit.beta.size(); ++k)
    if (!std::isfinite(fit.beta[k])) fit.beta[k] = 0.0;
  fit.rss = (y - design * fit.beta).squaredNorm();
  return fit;
}

inline double mars_gcv(double rss, Eigen::Index n, Eigen::Index n_coefficients, Eigen::Index n_knots,
                       double penalty) {
  const double nd = static_cast<double>(n);
  const double c = static_cast<double>(n_coefficients) + penalty * static_cast<double>(n_knots);
  if (c >= nd) return std::numeric_limits<double>::infinity();
  const double shrink = 1.0 - c / nd;
  return (rss / nd) / (shrink * shrink);
}

inline Eigen::Index count_knots(const std::vector<MarsBasis>& bases, const std::vector<int>& subset) {
  std::set<int> ids;
  for (int l : subset)
    if (bases[static_cast<std::size_t>(l)].pair_id >= 0) ids.insert(bases[static_cast<std::size_t>(l)].pair_id);
  return static_cast<Eigen::Index>(ids.size());
}

}  // namespace detail

inline MarsModel fit_mars(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MarsOptions& options = {}) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n == 0) throw Error("MARS: no training data");
  const int max_bases = options.max_bases == 0 ? mars_default_max_bases(n) : options.max_bases;
  if (max_bases < 1) throw Error("MARS: max_bases must be at least 1");
  if (options.max_order < 1) throw Error("MARS: max_order must be at least 1");

  // Sorted distinct values per variable are the candidate knots.
  std::vector<std::vector<double>> knots(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    auto& k = knots[static_cast<std::size_t>(j)];
    k.assign(x.col(j).data(), x.col(j).data() + n);
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
  }

  MarsModel model;
  std::vector<MarsBasis> bases{MarsBasis{}};
  std::vector<Eigen::VectorXd> columns{Eigen::VectorXd::Ones(n)};

  detail::OrthoBasis ortho;
  Eigen::VectorXd unit;
  ortho.add(columns[0], &unit);
  Eigen::VectorXd residual = y - unit.dot(y) * unit;
  double rss = residual.squaredNorm();
  const double tss = rss;
  model.forward_rss.push_back(rss);

  int n_terms = 0;  // non-intercept bases
  int pair_id = 0;
  while (n_terms < max_bases && tss > 0.0) {
    const int slots = max_bases - n_terms;
    // Need n > number of coefficients after the step.
    if (static_cast<Eigen::Index>(bases.size()) + std::min(slots, 2) >= n) break;

    double best_gain = 0.0;
    std::vector<MarsBasis> best_new;
    std::vector<Eigen::VectorXd> best_cols;

    for (std::size_t l = 0; l < bases.size(); ++l) {
      const MarsBasis& parent = bases[l];
      if (parent.order() >= options.max_order) continue;
      const Eigen::VectorXd& parent_col = columns[l];
      for (Eigen::Index j = 0; j < p; ++j) {
        if (parent.uses(static_cast<int>(j))) continue;
        for (double t : knots[static_cast<std::size_t>(j)]) {
          Eigen::VectorXd plus(n), minus(n);
          for (Eigen::Index i = 0; i < n; ++i) {
            plus[i] = parent_col[i] * std::max(0.0, x(i, j) - t);
            minus[i] = parent_col[i] * std::max(0.0, t - x(i, j));
          }
          // Score the pair (or, with one slot left, each side alone).
          struct Side {
            Eigen::VectorXd col;
            int sign;
          };
          std::vector<std::vector<Side>> options_to_score;
          if (slots >= 2)
            options_to_score.push_back({{plus, 1}, {minus, -1}});
          else {
            options_to_score.push_back({{plus, 1}});
            options_to_score.push_back({{minus, -1}});
          }
          for (auto& sides : options_to_score) {
            double gain = 0.0;
            std::vector<MarsBasis> new_bases;
            std::vector<Eigen::VectorXd> new_cols;
            std::vector<Eigen::VectorXd> accepted;  // unit vectors of sides already scored
            for (auto& side : sides) {
              const double scale = side.col.norm();
              if (scale == 0.0) continue;
              Eigen::VectorXd q = ortho.residual(side.col);
              for (const auto& a : accepted) q -= a.dot(q) * a;
              const double norm = q.norm();
              if (norm <= 1e-10 * scale) continue;
              q /= norm;
              const double proj = q.dot(residual);
              gain += proj * proj;
              accepted.push_back(std::move(q));
              MarsBasis b = parent;
              b.factors.push_back({static_cast<int>(j), t, side.sign});
              new_bases.push_back(std::move(b));
              new_cols.push_back(side.col);
            }
            if (gain > best_gain) {
              best_gain = gain;
              best_new = std::move(new_bases);
              best_cols = std::move(new_cols);
            }
          }
        }
      }
    }

    if (best_new.empty() || best_gain <= 1e-12 * tss) break;
    for (std::size_t s = 0; s < best_new.size(); ++s) {
      Eigen::VectorXd q;
      if (!ortho.add(best_cols[s], &q)) continue;
      residual -= q.dot(residual) * q;
      best_new[s].pair_id = pair_id;
      bases.push_back(best_new[s]);
      columns.push_back(best_cols[s]);
      ++n_terms;
    }
    ++pair_id;
    rss = residual.squaredNorm();
    model.forward_rss.push_back(rss);
  }

  // Backward pass.
  const Eigen::Index m = static_cast<Eigen::Index>(bases.size());
  auto design_of = [&](const std::vector<int>& subset) {
    Eigen::MatrixXd d(n, static_cast<Eigen::Index>(subset.size()));
    for (std::size_t c = 0; c < subset.size(); ++c) d.col(static_cast<Eigen::Index>(c)) = columns[static_cast<std::size_t>(subset[c])];
    return d;
  };
  auto gcv_of = [&](const std::vector<int>& subset, double subset_rss) {
    return detail::mars_gcv(subset_rss, n, static_cast<Eigen::Index>(subset.size()),
                            detail::count_knots(bases, subset), options.gcv_penalty);
  };

  std::vector<int> current(static_cast<std::size_t>(m));
  for (Eigen::Index l = 0; l < m; ++l) current[static_cast<std::size_t>(l)] = static_cast<int>(l);
  auto full = detail::least_squares(design_of(current), y);
  double best_gcv = gcv_of(current, full.rss);
  std::vector<int> best_subset = current;
  model.backward_gcv.push_back(best_gcv);

  while (current.size() > 1) {
    double step_gcv = std::numeric_limits<double>::infinity();
    double step_rss = std::numeric_limits<double>::infinity();
    std::vector<int> step_subset;
    for (std::size_t drop = 1; drop < current.size(); ++drop) {
      std::vector<int> trial;
      trial.reserve(current.size() - 1);
      for (std::size_t c = 0; c < current.size(); ++c)
        if (c != drop) trial.push_back(current[c]);
      const auto fit = detail::least_squares(design_of(trial), y);
      const double g = gcv_of(trial, fit.rss);
      model.backward_gcv.push_back(g);
      if (g < best_gcv) {
        best_gcv = g;
        best_subset = trial;
      }
      if (step_subset.empty() || g < step_gcv || (g == step_gcv && fit.rss < step_rss)) {
        step_gcv = g;
        step_rss = fit.rss;
        step_subset = std::move(trial);
      }
    }
    current = std::move(step_subset);
  }

  auto final_fit = detail::least_squares(design_of(best_subset), y);
  model.gcv = gcv_of(best_subset, final_fit.rss);
  for (int l : best_subset) model.bases.push_back(bases[static_cast<std::size_t>(l)]);
  model.coefficients = final_fit.beta;
  return model;
}

}  // namespace vmap
