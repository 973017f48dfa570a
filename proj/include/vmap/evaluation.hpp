#pragma once

// Error measures and the interpolation / extrapolation benchmark.

#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vmap/csv.hpp"
#include "vmap/dataspace.hpp"
#include "vmap/parallel.hpp"
#include "vmap/surrogates/surrogate.hpp"
#include "vmap/types.hpp"

namespace vmap {

enum class BenchmarkMode : std::uint8_t { Interpolation, Extrapolation };

inline std::string_view to_string(BenchmarkMode m) {
  return m == BenchmarkMode::Interpolation ? "interpolation" : "extrapolation";
}

inline std::optional<BenchmarkMode> parse_benchmark_mode(std::string_view text) {
  if (detail::iequals(text, "interpolation")) return BenchmarkMode::Interpolation;
  if (detail::iequals(text, "extrapolation")) return BenchmarkMode::Extrapolation;
  return std::nullopt;
}

struct ErrorReport {
  std::string method;
  std::string mode;
  std::size_t n = 0;
  double er1 = 0.0;
  double rmse = 0.0;
  double er2 = 0.0;
  double mae = 0.0;
  double er3 = 0.0;
  std::vector<double> ratios;  // prediction / truth, in point order
};

/// RMSE, MAE and the three relative error rates of `predicted` against `truth`.
inline ErrorReport compute_metrics(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size())
    throw Error("metrics: " + std::to_string(truth.size()) + " truth values but " +
                std::to_string(predicted.size()) + " predictions");
  if (truth.empty()) throw Error("metrics: no points");
  ErrorReport r;
  r.n = truth.size();
  r.ratios.resize(r.n);
  double sum_y = 0.0, sum_sq = 0.0, sum_abs = 0.0, sum_rel = 0.0;
  for (std::size_t k = 0; k < r.n; ++k) {
    const double y = truth[k];
    if (!(y > 0.0)) throw Error("metrics: truth value at point " + std::to_string(k) + " is not positive");
    const double e = predicted[k] - y;
    r.ratios[k] = predicted[k] / y;
    sum_y += y;
    sum_sq += e * e;
    sum_abs += std::abs(e);
    sum_rel += std::abs(r.ratios[k] - 1.0);
  }
  const double n = static_cast<double>(r.n);
  const double mean = sum_y / n;
  r.rmse = std::sqrt(sum_sq / n);
  r.mae = sum_abs / n;
  r.er1 = sum_rel / n;
  r.er2 = r.rmse / mean;
  r.er3 = r.mae / mean;
  return r;
}

/// Fits each method per map (per IO mode for the categorical GP) on the
/// training part of `split`, predicts the chosen test part, and pools all
/// test points into one report per method. Extrapolation always models the
/// raw response. Maps without test points are not fitted.
inline std::vector<ErrorReport> run_benchmark(const std::vector<ModelSpec>& methods, const DatasetSplit& split,
                                              BenchmarkMode mode, unsigned jobs = 1) {
  const auto training = positive_variability(split.training);
  const auto tests = positive_variability(mode == BenchmarkMode::Interpolation ? split.interpolation_test
                                                                                : split.extrapolation_test);
  std::vector<ErrorReport> reports;
  if (tests.empty()) throw Error(std::string("benchmark: the ") + std::string(to_string(mode)) + " test set is empty");

  std::vector<double> truth(tests.size());
  for (std::size_t k = 0; k < tests.size(); ++k) truth[k] = tests[k].pvm_kb_s;

  for (ModelSpec spec : methods) {
    if (mode == BenchmarkMode::Extrapolation) spec.response_scale = ResponseScale::Raw;
    spec.validate();

    // Test points grouped by the model that serves them, in first-seen order.
    std::vector<VariabilityMapKey> group_keys;
    std::vector<std::vector<std::size_t>> group_points;
    std::map<VariabilityMapKey, std::size_t> slot;
    for (std::size_t k = 0; k < tests.size(); ++k) {
      VariabilityMapKey key = tests[k].key();
      if (spec.per_mode()) key = {key.io_mode, Scheduler::CFQ, Scheduler::CFQ};
      auto [it, inserted] = slot.try_emplace(key, group_keys.size());
      if (inserted) {
        group_keys.push_back(key);
        group_points.emplace_back();
      }
      group_points[it->second].push_back(k);
    }

    std::vector<double> predicted(tests.size());
    parallel_for(group_keys.size(), jobs, [&](std::size_t g) {
      const auto& first = tests[group_points[g].front()];
      const auto train = training_group(spec, training, first.key());
      try {
        const Surrogate model = fit(spec, train);
        for (std::size_t k : group_points[g]) predicted[k] = model.predict(tests[k].point, tests[k].key());
      } catch (const Error& e) {
        const std::string where = spec.per_mode() ? std::string(to_string(first.config.io_mode))
                                                  : to_string(first.key());
        throw Error(std::string(to_string(spec.kind)) + " fit failed for " + where + ": " + e.what());
      }
    });

    ErrorReport r = compute_metrics(truth, predicted);
    r.method = std::string(to_string(spec.kind));
    r.mode = std::string(to_string(mode));
    reports.push_back(std::move(r));
  }
  return reports;
}

inline constexpr std::string_view kReportHeader = "method,mode,n,er1,rmse,er2,mae,er3";
inline constexpr std::string_view kRatioHeader = "method,mode,point_index,ratio";

inline void write_reports(std::ostream& out, const std::vector<ErrorReport>& reports) {
  out << kReportHeader << '\n';
  for (const auto& r : reports)
    out << r.method << ',' << r.mode << ',' << r.n << ',' << csv::format(r.er1) << ',' << csv::format(r.rmse) << ','
        << csv::format(r.er2) << ',' << csv::format(r.mae) << ',' << csv::format(r.er3) << '\n';
}

inline void export_reports(const std::vector<ErrorReport>& reports, const std::string& path) {
  auto out = csv::open_output(path);
  write_reports(out, reports);
  if (!out) throw Error("failed writing '" + path + "'");
}

/// Parses a report table (ratios are not part of the table).
inline std::vector<ErrorReport> read_reports(std::istream& in) {
  csv::Reader reader(in);
  reader.expect_header({"method", "mode", "n", "er1", "rmse", "er2", "mae", "er3"});
  std::vector<ErrorReport> out;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (f.size() != 8) throw ParseError(reader.line_number(), "row", "expected 8 fields");
    ErrorReport r;
    r.method = std::string(f[0]);
    r.mode = std::string(f[1]);
    auto n = csv::parse_int(f[2]);
    if (!n || *n < 0) throw ParseError(reader.line_number(), "n", "not a count");
    r.n = static_cast<std::size_t>(*n);
    double* fields[] = {&r.er1, &r.rmse, &r.er2, &r.mae, &r.er3};
    static constexpr std::string_view names[] = {"er1", "rmse", "er2", "mae", "er3"};
    for (std::size_t c = 0; c < 5; ++c) {
      auto v = csv::parse_double(f[3 + c]);
      if (!v) throw ParseError(reader.line_number(), std::string(names[c]), "not a number");
      *fields[c] = *v;
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_ratio_distribution(std::ostream& out, const std::vector<ErrorReport>& reports) {
  out << kRatioHeader << '\n';
  for (const auto& r : reports)
    for (std::size_t k = 0; k < r.ratios.size(); ++k)
      out << r.method << ',' << r.mode << ',' << k << ',' << csv::format(r.ratios[k]) << '\n';
}

inline void export_ratio_distribution(const std::vector<ErrorReport>& reports, const std::string& path) {
  auto out = csv::open_output(path);
  write_ratio_distribution(out, reports);
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace vmap
