#pragma once

// DIRECT (dividing rectangles): deterministic global search over a box.
// The box is mapped to the unit cube; every rectangle is a product of sides
// of length 3^-level and is represented by its evaluated centre.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vmap/types.hpp"

namespace vmap {

struct DirectOptions {
  std::int64_t budget = 2000;      // maximum objective evaluations
  double epsilon = 1e-4;           // balance between local and global search
  int stagnation_window = 0;       // iterations without relative improvement before stopping; 0 disables
  double stagnation_tolerance = 1e-10;
  int max_level = 30;              // rectangles are not divided past side 3^-max_level
};

struct DirectResult {
  Eigen::VectorXd x;               // best evaluated point, in the original box
  double value = std::numeric_limits<double>::infinity();
  std::int64_t evaluations = 0;
  int iterations = 0;
  std::vector<double> best_trace;        // best value after each evaluation
  std::vector<double> max_radius_trace;  // largest rectangle half-diagonal (unit cube) after each iteration
  std::vector<Eigen::VectorXd> evaluated;  // every evaluated point, in the original box
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

namespace detail {

struct DirectRect {
  Eigen::VectorXd center;  // unit-cube coordinates
  std::vector<int> level;
  double value = 0.0;
  double size = 0.0;  // half-diagonal
};

inline double half_diagonal(std::vector<int> level) {
  std::sort(level.begin(), level.end());
  double s = 0.0;
  for (int l : level) s += std::pow(3.0, -2.0 * l);
  return 0.5 * std::sqrt(s);
}

inline std::string format_point(const Eigen::VectorXd& x) {
  std::ostringstream out;
  out.precision(17);
  out << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x[i];
  out << ')';
  return out.str();
}

/// Indices of potentially optimal rectangles: the best rectangle of each size
/// that lies on the lower-right convex hull of (size, value) and can improve
/// on the incumbent by at least epsilon * |fmin|.
inline std::vector<std::size_t> potentially_optimal(const std::vector<DirectRect>& rects, double fmin,
                                                    double epsilon, int max_level) {
  std::map<double, std::size_t> best_of_size;
  for (std::size_t i = 0; i < rects.size(); ++i) {
    const auto& r = rects[i];
    if (*std::min_element(r.level.begin(), r.level.end()) >= max_level) continue;
    auto [it, inserted] = best_of_size.try_emplace(r.size, i);
    if (!inserted && r.value < rects[it->second].value) it->second = i;
  }
  std::vector<std::size_t> groups;
  for (const auto& [size, i] : best_of_size) groups.push_back(i);

  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < groups.size(); ++a) {
    const auto& j = rects[groups[a]];
    double k_low = 0.0;
    double k_high = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < groups.size(); ++b) {
      if (b == a) continue;
      const auto& i = rects[groups[b]];
      const double slope = (j.value - i.value) / (j.size - i.size);
      if (i.size < j.size)
        k_low = std::max(k_low, slope);
      else
        k_high = std::min(k_high, slope);
    }
    if (k_low > k_high) continue;
    // Some admissible rate K must promise a nontrivial improvement.
    const double k_needed = (j.value - fmin + epsilon * std::abs(fmin)) / j.size;
    if (k_needed > k_high) continue;
    out.push_back(groups[a]);
  }
  // Largest rectangles first.
  std::sort(out.begin(), out.end(), [&](std::size_t p, std::size_t q) {
    if (rects[p].size != rects[q].size) return rects[p].size > rects[q].size;
    return p < q;
  });
  return out;
}

}  // namespace detail

/// Minimises g over [lower, upper]. Never evaluates outside the box and never
/// exceeds options.budget evaluations. Throws if g returns a non-finite value.
inline DirectResult direct_minimize(const Objective& g, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                    const DirectOptions& options = {}) {
  const Eigen::Index dim = lower.size();
  if (dim == 0 || upper.size() != dim) throw Error("DIRECT: bounds must be nonempty and of equal length");
  for (Eigen::Index i = 0; i < dim; ++i)
    if (!(lower[i] < upper[i])) throw Error("DIRECT: lower bound must be below upper bound in every coordinate");
  if (options.budget < 1) throw Error("DIRECT: budget must be at least 1");

  DirectResult result;
  const Eigen::VectorXd width = upper - lower;
  auto to_box = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    Eigen::VectorXd x = lower + u.cwiseProduct(width);
    return x.cwiseMax(lower).cwiseMin(upper);
  };
  auto evaluate = [&](const Eigen::VectorXd& u) {
    const Eigen::VectorXd x = to_box(u);
    const double v = g(x);
    if (!std::isfinite(v)) throw Error("DIRECT: objective is not finite at " + detail::format_point(x));
    ++result.evaluations;
    result.evaluated.push_back(x);
    if (v < result.value) {
      result.value = v;
      result.x = x;
    }
    result.best_trace.push_back(result.value);
    return v;
  };

  std::vector<detail::DirectRect> rects;
  {
    detail::DirectRect root;
    root.center = Eigen::VectorXd::Constant(dim, 0.5);
    root.level.assign(static_cast<std::size_t>(dim), 0);
    root.size = detail::half_diagonal(root.level);
    root.value = evaluate(root.center);
    rects.push_back(std::move(root));
  }

  double window_start_best = result.value;
  int since_improvement = 0;
  while (result.evaluations < options.budget) {
    const auto selected =
        detail::potentially_optimal(rects, result.value, options.epsilon, options.max_level);
    if (selected.empty()) break;
    bool divided_any = false;
    for (std::size_t idx : selected) {
      if (result.evaluations >= options.budget) break;
      // Longest sides have the smallest level.
      const int min_level = *std::min_element(rects[idx].level.begin(), rects[idx].level.end());
      const double delta = std::pow(3.0, -(min_level + 1));
      struct Sample {
        Eigen::Index dim;
        double w;
        Eigen::VectorXd c_plus, c_minus;
        double f_plus, f_minus;
      };
      std::vector<Sample> samples;
      for (Eigen::Index d = 0; d < dim; ++d) {
        if (rects[idx].level[static_cast<std::size_t>(d)] != min_level) continue;
        if (options.budget - result.evaluations < 2) break;
        Sample s;
        s.dim = d;
        s.c_plus = rects[idx].center;
        s.c_minus = rects[idx].center;
        s.c_plus[d] += delta;
        s.c_minus[d] -= delta;
        s.f_plus = evaluate(s.c_plus);
        s.f_minus = evaluate(s.c_minus);
        s.w = std::min(s.f_plus, s.f_minus);
        samples.push_back(std::move(s));
      }
      if (samples.empty()) break;
      divided_any = true;
      std::stable_sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.w < b.w; });
      for (auto& s : samples) {
        auto& parent = rects[idx];
        ++parent.level[static_cast<std::size_t>(s.dim)];
        parent.size = detail::half_diagonal(parent.level);
        detail::DirectRect plus{std::move(s.c_plus), parent.level, s.f_plus, parent.size};
        detail::DirectRect minus{std::move(s.c_minus), parent.level, s.f_minus, parent.size};
        rects.push_back(std::move(plus));
        rects.push_back(std::move(minus));
      }
    }
    if (!divided_any) break;
    ++result.iterations;
    double max_radius = 0.0;
    for (const auto& r : rects) max_radius = std::max(max_radius, r.size);
    result.max_radius_trace.push_back(max_radius);

    if (options.stagnation_window > 0) {
      const double gain = window_start_best - result.value;
      if (gain > options.stagnation_tolerance * std::max(1.0, std::abs(window_start_best))) {
        window_start_best = result.value;
        since_improvement = 0;
      } else if (++since_improvement >= options.stagnation_window) {
        break;
      }
    }
  }
  return result;
}

}  // namespace vmap
