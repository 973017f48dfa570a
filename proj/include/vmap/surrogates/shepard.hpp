#pragma once

// Linear Shepard interpolation: an inverse-distance blend of node-centred
// local linear fits with compactly supported weights.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vmap/types.hpp"

namespace vmap {

/// Local-fit neighbour count m = min(n, ceil(3p/2)).
inline Eigen::Index shepard_neighbor_count(Eigen::Index n, Eigen::Index p) {
  return std::min(n, (3 * p + 1) / 2);
}

struct ShepardPrediction {
  double value = 0.0;
  /// Set when the query lies outside every node's support and the nearest
  /// node's local fit was used instead.
  bool fallback = false;
};

struct ShepardModel {
  Eigen::MatrixXd nodes;          // n x p
  Eigen::VectorXd values;         // y_i
  Eigen::MatrixXd slopes;         // n x p, row i is beta_i
  Eigen::VectorXd outer_radius;   // u_i = min(d/2, r_i)
  Eigen::VectorXd fit_radius;     // v_i = 1.1 r_i
  Eigen::Index neighbors = 0;     // m
  double diameter = 0.0;          // d, max pairwise distance

  double local_fit(Eigen::Index i, const Eigen::VectorXd& x) const {
    return values[i] + (x - nodes.row(i).transpose()).dot(slopes.row(i).transpose());
  }

  double weight(Eigen::Index i, const Eigen::VectorXd& x) const {
    const double dist = (x - nodes.row(i).transpose()).norm();
    const double h = std::max(0.0, 1.0 / dist - 1.0 / outer_radius[i]);
    return h * h;
  }

  ShepardPrediction predict_detailed(const Eigen::VectorXd& x) const {
    const Eigen::Index n = nodes.rows();
    const double hit = 1e-12 * diameter;
    double num = 0.0;
    double den = 0.0;
    Eigen::Index nearest = 0;
    double nearest_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dist = (x - nodes.row(i).transpose()).norm();
      if (dist < hit) return {local_fit(i, x), false};
      if (dist < nearest_dist) {
        nearest_dist = dist;
        nearest = i;
      }
      if (dist >= outer_radius[i]) continue;
      const double h = 1.0 / dist - 1.0 / outer_radius[i];
      const double w = h * h;
      num += w * local_fit(i, x);
      den += w;
    }
    if (den > 0.0) return {num / den, false};
    return {local_fit(nearest, x), true};
  }

  double predict(const Eigen::VectorXd& x) const { return predict_detailed(x).value; }
};

inline ShepardModel fit_shepard(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n < p + 2)
    throw Error("linear Shepard: need at least " + std::to_string(p + 2) + " points, got " +
                std::to_string(n));

  ShepardModel model;
  model.nodes = x;
  model.values = y;
  model.neighbors = shepard_neighbor_count(n, p);
  model.slopes.resize(n, p);
  model.outer_radius.resize(n);
  model.fit_radius.resize(n);

  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (x.row(i) - x.row(j)).norm();
      if (d == 0.0)
        throw Error("linear Shepard: duplicate points at rows " + std::to_string(i) + " and " +
                    std::to_string(j));
      dist(i, j) = dist(j, i) = d;
    }
  }
  model.diameter = dist.maxCoeff();

  // The radius counts neighbours other than the node itself.
  const Eigen::Index k = std::min(model.neighbors, n - 1);
  std::vector<double> others;
  others.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    others.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) others.push_back(dist(i, j));
    std::nth_element(others.begin(), others.begin() + (k - 1), others.end());
    const double r = others[static_cast<std::size_t>(k - 1)];
    model.outer_radius[i] = std::min(model.diameter / 2.0, r);
    model.fit_radius[i] = 1.1 * r;

    // Weighted least squares for p_i(x) = y_i + (x - x_i)' beta_i over
    // neighbours inside node i's fit radius.
    Eigen::MatrixXd a(n, p);
    Eigen::VectorXd b(n);
    Eigen::Index rows = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = dist(i, j);
      if (d >= model.fit_radius[i]) continue;
      const double sw = 1.0 / d - 1.0 / model.fit_radius[i];  // sqrt of the weight
      a.row(rows) = sw * (x.row(j) - x.row(i));
      b[rows] = sw * (y[j] - y[i]);
      ++rows;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a.topRows(rows));
    model.slopes.row(i) = cod.solve(b.head(rows)).transpose();
  }
  return model;
}

}  // namespace vmap
