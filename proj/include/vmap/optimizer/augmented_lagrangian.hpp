#pragma once

// min f(x) subject to m(x) >= m0 over a box, through the augmented
// Lagrangian with the slack variable minimised out:
//   L(x; u, c) = f(x) + (max(0, u + c (m0 - m(x)))^2 - u^2) / (2c)

#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "vmap/optimizer/direct.hpp"
#include "vmap/types.hpp"

namespace vmap {

enum class SolverMode : std::uint8_t { SinglePass, Iterative };

inline std::string_view to_string(SolverMode m) { return m == SolverMode::SinglePass ? "single-pass" : "iterative"; }

inline std::optional<SolverMode> parse_solver_mode(std::string_view text) {
  if (detail::iequals(text, "single-pass")) return SolverMode::SinglePass;
  if (detail::iequals(text, "iterative")) return SolverMode::Iterative;
  return std::nullopt;
}

inline constexpr double kFeasibilityTolerance = 1e-6;

/// m >= m0 up to a tolerance relative to m0.
inline bool is_feasible(double m, double m0) { return m >= m0 - kFeasibilityTolerance * std::abs(m0); }

/// L given the objective value f and constraint value m at some x.
inline double augmented_objective(double f, double m, double u, double c, double m0) {
  const double t = std::max(0.0, u + c * (m0 - m));
  return f + (t * t - u * u) / (2.0 * c);
}

struct ConstrainedProblem {
  Objective objective;           // f
  Objective constraint_surface;  // m
  double m0 = 0.0;
  Eigen::VectorXd lower, upper;
  double c = 1000.0;
  std::int64_t budget = 2000;  // evaluations per DIRECT run

  void validate() const {
    if (!objective || !constraint_surface) throw Error("constrained problem: missing objective or constraint");
    if (!(m0 > 0.0)) throw Error("constrained problem: m0 must be positive");
    if (!(c > 0.0)) throw Error("constrained problem: c must be positive");
    if (budget < 1) throw Error("constrained problem: budget must be at least 1");
  }
};

inline double augmented_objective(const Eigen::VectorXd& x, double u, double c, const ConstrainedProblem& problem) {
  return augmented_objective(problem.objective(x), problem.constraint_surface(x), u, c, problem.m0);
}

struct ConstrainedOptions {
  SolverMode mode = SolverMode::SinglePass;
  int max_outer = 8;          // multiplier updates in iterative mode
  double step_tolerance = 1e-6;
  DirectOptions direct;       // budget is taken from the problem
};

struct ConstrainedSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  double constraint = 0.0;
  bool feasible = false;
  std::int64_t evaluations = 0;
  int outer_iterations = 0;
  double multiplier = 0.0;  // u used in the final solve
};

/// Single-pass: one DIRECT run on L(x; 0, c). Iterative: repeat with
/// u <- max(0, u + c (m0 - m(x))) and c <- 10 c until x moves by at most
/// step_tolerance.
inline ConstrainedSolution solve_constrained(const ConstrainedProblem& problem, const ConstrainedOptions& options = {}) {
  problem.validate();
  DirectOptions direct = options.direct;
  direct.budget = problem.budget;

  ConstrainedSolution out;
  double u = 0.0;
  double c = problem.c;
  const int rounds = options.mode == SolverMode::SinglePass ? 1 : std::max(1, options.max_outer);
  for (int k = 0; k < rounds; ++k) {
    auto lagrangian = [&](const Eigen::VectorXd& x) { return augmented_objective(x, u, c, problem); };
    const DirectResult r = direct_minimize(lagrangian, problem.lower, problem.upper, direct);
    out.evaluations += r.evaluations;
    out.outer_iterations = k + 1;
    out.multiplier = u;
    const bool converged = k > 0 && (r.x - out.x).norm() <= options.step_tolerance;
    out.x = r.x;
    if (converged) break;
    u = std::max(0.0, u + c * (problem.m0 - problem.constraint_surface(r.x)));
    c *= 10.0;
  }
  out.objective = problem.objective(out.x);
  out.constraint = problem.constraint_surface(out.x);
  out.feasible = is_feasible(out.constraint, problem.m0);
  return out;
}

}  // namespace vmap
