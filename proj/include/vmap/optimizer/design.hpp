#pragma once

// Configuration design: for every IO mode, minimise predicted variability
// subject to a minimum predicted mean throughput, sweeping the nine
// scheduler pairs.

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "vmap/csv.hpp"
#include "vmap/dataspace.hpp"
#include "vmap/optimizer/augmented_lagrangian.hpp"
#include "vmap/optimizer/direct.hpp"
#include "vmap/optimizer/rounding.hpp"
#include "vmap/parallel.hpp"
#include "vmap/surrogates/surrogate.hpp"

namespace vmap {

/// Bounds on the encoded coordinates (ln file size, ln record size, ln threads, frequency).
struct BoxDomain {
  std::array<double, kDims> lower{};
  std::array<double, kDims> upper{};

  void validate() const {
    for (std::size_t i = 0; i < kDims; ++i)
      if (!(lower[i] < upper[i]))
        throw Error("domain: lower bound must be below upper bound in coordinate " + std::to_string(i));
  }

  /// Bounding box of the observations' encodings.
  static BoxDomain of(const std::vector<VariabilityObservation>& obs) {
    if (obs.empty()) throw Error("domain: no observations");
    BoxDomain d;
    d.lower = d.upper = obs.front().point.coords;
    for (const auto& o : obs)
      for (std::size_t i = 0; i < kDims; ++i) {
        d.lower[i] = std::min(d.lower[i], o.point[i]);
        d.upper[i] = std::max(d.upper[i], o.point[i]);
      }
    return d;
  }

  Eigen::VectorXd lower_vector() const { return Eigen::Map<const Eigen::VectorXd>(lower.data(), kDims); }
  Eigen::VectorXd upper_vector() const { return Eigen::Map<const Eigen::VectorXd>(upper.data(), kDims); }
};

struct M0Rule {
  std::optional<double> fixed;  // empty: mean throughput of the map's observations

  std::string to_string() const { return fixed ? "fixed:" + csv::format(*fixed) : "per-map-mean"; }
};

inline M0Rule parse_m0_rule(std::string_view text) {
  text = csv::trim(text);
  if (detail::iequals(text, "per-map-mean")) return {};
  if (text.size() > 6 && detail::iequals(text.substr(0, 6), "fixed:")) {
    auto v = csv::parse_double(text.substr(6));
    if (!v || !(*v > 0.0)) throw Error("m0_rule: fixed value must be a positive number");
    return {*v};
  }
  throw Error("m0_rule: expected 'per-map-mean' or 'fixed:<value>', got '" + std::string(text) + "'");
}

/// Settings for a design run, read from `key = value` lines.
struct ProblemConfig {
  ModelSpec model = ModelSpec::of(ModelKind::LSP);
  double c = 1000.0;
  std::int64_t budget = 2000;
  M0Rule m0_rule;
  SolverMode solver = SolverMode::SinglePass;
  int max_outer = 8;
  std::optional<std::array<double, kDims>> lower, upper;  // default: per-map data bounds

  void validate() const {
    model.validate();
    if (!(c > 0.0)) throw Error("problem config: c must be positive");
    if (budget < 1) throw Error("problem config: budget must be at least 1");
    if (max_outer < 1) throw Error("problem config: max_outer must be at least 1");
    if (lower.has_value() != upper.has_value())
      throw Error("problem config: give both lower and upper bounds or neither");
    if (lower) BoxDomain{*lower, *upper}.validate();
  }
};

inline ProblemConfig parse_problem_config(std::istream& in) {
  ProblemConfig cfg;
  std::string raw;
  std::size_t line = 0;
  auto bounds = [&](std::string_view value, const char* field) {
    std::array<double, kDims> out{};
    std::string text(value);
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream s(text);
    std::string token;
    std::size_t i = 0;
    while (s >> token) {
      auto v = csv::parse_double(token);
      if (!v || i >= kDims) throw ParseError(line, field, "expected 4 numbers");
      out[i++] = *v;
    }
    if (i != kDims) throw ParseError(line, field, "expected 4 numbers");
    return out;
  };
  while (std::getline(in, raw)) {
    ++line;
    auto text = csv::trim(raw);
    if (auto hash = text.find('#'); hash != std::string_view::npos) text = csv::trim(text.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(line, "line", "expected 'key = value'");
    const std::string key(csv::trim(text.substr(0, eq)));
    const auto value = csv::trim(text.substr(eq + 1));
    try {
      if (key == "c") {
        auto v = csv::parse_double(value);
        if (!v) throw ParseError(line, key, "not a number");
        cfg.c = *v;
      } else if (key == "budget") {
        auto v = csv::parse_int(value);
        if (!v) throw ParseError(line, key, "not an integer");
        cfg.budget = *v;
      } else if (key == "max_outer") {
        auto v = csv::parse_int(value);
        if (!v) throw ParseError(line, key, "not an integer");
        cfg.max_outer = static_cast<int>(*v);
      } else if (key == "m0_rule") {
        cfg.m0_rule = parse_m0_rule(value);
      } else if (key == "solver") {
        auto v = parse_solver_mode(value);
        if (!v) throw ParseError(line, key, "expected 'single-pass' or 'iterative'");
        cfg.solver = *v;
      } else if (key == "method") {
        auto v = parse_model_kind(value);
        if (!v) throw ParseError(line, key, "unknown method '" + std::string(value) + "'");
        cfg.model.kind = *v;
      } else if (key == "response_scale") {
        auto v = parse_response_scale(value);
        if (!v) throw ParseError(line, key, "expected 'log' or 'raw'");
        cfg.model.response_scale = *v;
      } else if (key == "lower") {
        cfg.lower = bounds(value, "lower");
      } else if (key == "upper") {
        cfg.upper = bounds(value, "upper");
      } else {
        throw ParseError(line, key, "unknown setting");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line, key, e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ParseError(line, "config", e.what());
  }
  return cfg;
}

inline ProblemConfig read_problem_config(const std::string& path) {
  auto in = csv::open_input(path);
  return parse_problem_config(in);
}

struct OptimizationResult {
  VariabilityMapKey key;
  bool has_data = false;
  ContinuousPoint x_star;           // continuous optimum
  SystemConfiguration config_star;  // rounded recommendation
  double objective_value = std::numeric_limits<double>::quiet_NaN();   // predicted PVM at config_star
  double constraint_value = std::numeric_limits<double>::quiet_NaN();  // predicted mean throughput at config_star
  double m0 = std::numeric_limits<double>::quiet_NaN();
  bool feasible = false;
  std::int64_t evaluations_used = 0;
};

inline SystemConfiguration apply_rounding(const VariabilityMapKey& key, const RoundedConfiguration& r) {
  return {key.io_mode, key.io_scheduler, key.vm_io_scheduler, r.frequency_ghz, r.threads, r.file_size_kb,
          r.record_size_kb};
}

/// Solves one map's design problem and rounds the answer; f and m are
/// evaluated again at the rounded configuration.
inline OptimizationResult solve_map(const Surrogate& variability, const Surrogate& performance,
                                    const VariabilityMapKey& key, double m0, const BoxDomain& domain,
                                    const ProblemConfig& cfg) {
  domain.validate();
  // Box points with record size above file size are not runnable; they are
  // evaluated (and reported) at record size = file size.
  auto point_of = [](const Eigen::VectorXd& x) {
    ContinuousPoint p;
    for (std::size_t i = 0; i < kDims; ++i) p[i] = x[static_cast<Eigen::Index>(i)];
    p[1] = std::min(p[1], p[0]);
    return p;
  };
  ConstrainedProblem problem;
  problem.objective = [&](const Eigen::VectorXd& x) { return variability.predict(point_of(x), key); };
  problem.constraint_surface = [&](const Eigen::VectorXd& x) { return performance.predict(point_of(x), key); };
  problem.m0 = m0;
  problem.lower = domain.lower_vector();
  problem.upper = domain.upper_vector();
  problem.c = cfg.c;
  problem.budget = cfg.budget;
  ConstrainedOptions options;
  options.mode = cfg.solver;
  options.max_outer = cfg.max_outer;
  const ConstrainedSolution sol = solve_constrained(problem, options);

  OptimizationResult out;
  out.key = key;
  out.has_data = true;
  out.x_star = point_of(sol.x);
  out.config_star = apply_rounding(key, round_solution(out.x_star));
  const ContinuousPoint rounded = encode_point(out.config_star);
  out.objective_value = variability.predict(rounded, key);
  out.constraint_value = performance.predict(rounded, key);
  out.m0 = m0;
  out.feasible = is_feasible(out.constraint_value, m0);
  out.evaluations_used = sol.evaluations;
  return out;
}

/// Fitted surrogates for every map present in the data.
struct DesignModels {
  std::map<VariabilityMapKey, std::size_t> slot;  // map key -> index into the vectors below
  std::vector<Surrogate> variability;
  std::vector<Surrogate> performance;
};

inline DesignModels fit_design_models(const std::vector<VariabilityObservation>& observations,
                                      const ModelSpec& spec, unsigned jobs = 1) {
  // One model per map, or per mode for the categorical GP.
  std::vector<VariabilityMapKey> groups;
  std::map<VariabilityMapKey, std::size_t> group_of;
  DesignModels models;
  for (const auto& [key, obs] : group_by_key(observations)) {
    const VariabilityMapKey g = spec.per_mode() ? VariabilityMapKey{key.io_mode, Scheduler::CFQ, Scheduler::CFQ} : key;
    auto [it, inserted] = group_of.try_emplace(g, groups.size());
    if (inserted) groups.push_back(key);
    models.slot[key] = it->second;
  }
  std::vector<std::optional<Surrogate>> f(groups.size()), m(groups.size());
  parallel_for(groups.size(), jobs, [&](std::size_t i) {
    const auto train = training_group(spec, observations, groups[i]);
    try {
      f[i] = fit(spec, train, Response::Variability);
      m[i] = fit_performance_surface(spec, train);
    } catch (const Error& e) {
      throw Error(std::string(to_string(spec.kind)) + " fit failed for " + to_string(groups[i]) + ": " + e.what());
    }
  });
  for (std::size_t i = 0; i < groups.size(); ++i) {
    models.variability.push_back(std::move(*f[i]));
    models.performance.push_back(std::move(*m[i]));
  }
  return models;
}

/// Every map's solution, indexed by VariabilityMapKey::index(); maps without
/// data have has_data = false.
inline std::vector<OptimizationResult> optimize_all_maps(const std::vector<VariabilityObservation>& observations,
                                                         const ProblemConfig& cfg, unsigned jobs = 1) {
  cfg.validate();
  const auto data = positive_variability(observations);
  const DesignModels models = fit_design_models(data, cfg.model, jobs);
  const auto by_key = group_by_key(data);

  std::vector<OptimizationResult> out(kMapCount);
  for (std::size_t i = 0; i < kMapCount; ++i) out[i].key = VariabilityMapKey::from_index(i);
  std::vector<VariabilityMapKey> keys;
  for (const auto& [key, obs] : by_key) keys.push_back(key);
  parallel_for(keys.size(), jobs, [&](std::size_t i) {
    const auto& key = keys[i];
    const auto& obs = by_key.at(key);
    double m0 = 0.0;
    if (cfg.m0_rule.fixed) {
      m0 = *cfg.m0_rule.fixed;
    } else {
      for (const auto& o : obs) m0 += o.mean_throughput_kb_s;
      m0 /= static_cast<double>(obs.size());
    }
    const BoxDomain domain = cfg.lower ? BoxDomain{*cfg.lower, *cfg.upper} : BoxDomain::of(obs);
    const std::size_t s = models.slot.at(key);
    out[key.index()] = solve_map(models.variability[s], models.performance[s], key, m0, domain, cfg);
  });
  return out;
}

/// Picks, per IO mode, the feasible scheduler pair with the least predicted
/// variability. A mode with no feasible pair reports its least-variability
/// pair flagged infeasible; a mode with no data reports an empty row.
inline std::vector<OptimizationResult> select_per_mode(const std::vector<OptimizationResult>& per_map) {
  std::vector<OptimizationResult> rows;
  for (auto mode : kAllIoModes) {
    const OptimizationResult* best = nullptr;
    for (const auto& r : per_map) {
      if (r.key.io_mode != mode || !r.has_data) continue;
      if (!best) {
        best = &r;
        continue;
      }
      if (r.feasible != best->feasible) {
        if (r.feasible) best = &r;
        continue;
      }
      if (r.objective_value < best->objective_value) best = &r;
    }
    if (best) {
      rows.push_back(*best);
    } else {
      OptimizationResult empty;
      empty.key = {mode, Scheduler::CFQ, Scheduler::CFQ};
      rows.push_back(empty);
    }
  }
  return rows;
}

/// One row per IO mode (13 rows).
inline std::vector<OptimizationResult> optimize_all_modes(const std::vector<VariabilityObservation>& observations,
                                                          const ProblemConfig& cfg = {}, unsigned jobs = 1) {
  return select_per_mode(optimize_all_maps(observations, cfg, jobs));
}

inline constexpr std::string_view kOptimizationHeader =
    "mode,io_scheduler,vm_io_scheduler,file_size_kb,record_size_kb,threads,frequency_ghz,predicted_pvm,"
    "predicted_mean_throughput,m0,feasible,evaluations";

inline void write_optimization_csv(std::ostream& out, const std::vector<OptimizationResult>& rows) {
  out << kOptimizationHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.key.io_mode) << ',';
    if (!r.has_data) {
      out << ",,,,,,,,," << "false,0\n";
      continue;
    }
    const auto& c = r.config_star;
    out << to_string(r.key.io_scheduler) << ',' << to_string(r.key.vm_io_scheduler) << ',' << c.file_size_kb << ','
        << c.record_size_kb << ',' << c.threads << ',' << csv::format(c.frequency_ghz) << ','
        << csv::format(r.objective_value) << ',' << csv::format(r.constraint_value) << ',' << csv::format(r.m0)
        << ',' << (r.feasible ? "true" : "false") << ',' << r.evaluations_used << '\n';
  }
}

}  // namespace vmap
