#pragma once

// Batch commands behind the `vmap` executable. Each command writes its
// artifact plus a `<artifact>.manifest.json` describing the run.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "vmap/csv.hpp"
#include "vmap/dataspace.hpp"
#include "vmap/evaluation.hpp"
#include "vmap/optimizer/design.hpp"
#include "vmap/surrogates/serialization.hpp"
#include "vmap/surrogates/surrogate.hpp"
#include "vmap/synthetic.hpp"
#include "vmap/version.hpp"

namespace vmap::cli {

inline constexpr std::uint64_t kDefaultSeed = 20190723;

struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::string> models;
  std::string split_spec;
  std::uint64_t seed = kDefaultSeed;
  std::string timestamp;
  std::string version = std::string(kVersion);
  nlohmann::json settings = nlohmann::json::object();

  nlohmann::json to_json() const {
    return {{"command", command}, {"inputs", inputs},         {"outputs", outputs},
            {"models", models},   {"split_spec", split_spec}, {"seed", seed},
            {"timestamp", timestamp}, {"version", version},   {"settings", settings}};
  }
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

inline std::string manifest_path(const std::string& artifact) { return artifact + ".manifest.json"; }

inline void write_manifest(RunManifest manifest, const std::string& artifact) {
  manifest.timestamp = utc_timestamp();
  auto out = csv::open_output(manifest_path(artifact));
  out << manifest.to_json().dump(2) << '\n';
  if (!out) throw Error("failed writing manifest for '" + artifact + "'");
}

/// Parses "LM,LSP,MARS" (case-insensitive).
inline std::vector<ModelKind> parse_methods(std::string_view text) {
  std::vector<ModelKind> out;
  for (auto token : csv::split(text)) {
    token = csv::trim(token);
    if (token.empty()) continue;
    auto k = parse_model_kind(token);
    if (!k) throw Error("unknown method '" + std::string(token) + "' (expected LM, GAMGLM, LSP, MARS or CGP)");
    out.push_back(*k);
  }
  if (out.empty()) throw Error("no methods given");
  return out;
}

inline std::vector<ModelSpec> make_specs(const std::vector<ModelKind>& kinds, ResponseScale scale,
                                         std::uint64_t seed) {
  std::vector<ModelSpec> specs;
  for (auto k : kinds) {
    ModelSpec s = ModelSpec::of(k, scale);
    s.cgp.seed = seed;
    specs.push_back(s);
  }
  return specs;
}

inline std::vector<std::string> spec_names(const std::vector<ModelSpec>& specs) {
  std::vector<std::string> out;
  for (const auto& s : specs) out.push_back(std::string(to_string(s.kind)) + ":" + std::string(to_string(s.response_scale)));
  return out;
}

inline void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

// ---------------------------------------------------------------------------

struct IngestOptions {
  std::string runs_csv;
  std::string out;
};

inline void cmd_ingest(const IngestOptions& o) {
  const auto runs = read_runs_csv(o.runs_csv);
  const auto obs = compute_pvm(runs);
  spdlog::info("ingested {} runs into {} configurations", runs.size(), obs.size());
  ensure_parent(o.out);
  {
    auto out = csv::open_output(o.out);
    write_observations_csv(out, obs);
    if (!out) throw Error("failed writing '" + o.out + "'");
  }
  write_manifest({.command = "ingest", .inputs = {o.runs_csv}, .outputs = {o.out}}, o.out);
}

struct FitOptions {
  std::string observations_csv;
  std::vector<ModelKind> methods = {ModelKind::LSP};
  ResponseScale scale = ResponseScale::Log;
  std::string split_spec;  // if set, fit on the training part only
  bool performance = false;  // model mean throughput instead of variability
  std::uint64_t seed = kDefaultSeed;
  unsigned jobs = 0;
  std::string out;
};

inline std::vector<VariabilityObservation> fit_data(const FitOptions& o) {
  auto obs = positive_variability(read_observations_csv(o.observations_csv));
  if (!o.split_spec.empty()) obs = split_dataset(obs, read_split_spec(o.split_spec)).training;
  return obs;
}

inline void cmd_fit(const FitOptions& o) {
  const auto obs = fit_data(o);
  const auto specs = make_specs(o.methods, o.scale, o.seed);
  const Response response = o.performance ? Response::MeanThroughput : Response::Variability;
  std::vector<Surrogate> models;
  for (const auto& spec : specs) {
    std::vector<VariabilityMapKey> groups;
    for (const auto& [key, rows] : group_by_key(obs))
      if (!spec.per_mode() || groups.empty() || groups.back().io_mode != key.io_mode) groups.push_back(key);
    std::vector<std::optional<Surrogate>> fitted(groups.size());
    parallel_for(groups.size(), o.jobs, [&](std::size_t i) {
      try {
        fitted[i] = fit(spec, training_group(spec, obs, groups[i]), response);
      } catch (const Error& e) {
        throw Error(std::string(to_string(spec.kind)) + " fit failed for " + to_string(groups[i]) + ": " + e.what());
      }
    });
    for (auto& m : fitted) models.push_back(std::move(*m));
    spdlog::info("fitted {} {} model(s)", groups.size(), to_string(spec.kind));
  }
  ensure_parent(o.out);
  save_bundle(o.out, models);
  RunManifest m{.command = "fit", .inputs = {o.observations_csv}, .outputs = {o.out}, .models = spec_names(specs),
                .split_spec = o.split_spec, .seed = o.seed};
  m.settings["response"] = o.performance ? "mean_throughput" : "pvm";
  write_manifest(m, o.out);
}

struct PredictOptions {
  std::string model;
  std::string configs_csv;  // columns: io_mode, io_scheduler, vm_io_scheduler, frequency_ghz, threads, file_size_kb, record_size_kb
  std::string out;
};

inline std::vector<SystemConfiguration> read_configurations(std::istream& in) {
  csv::Reader reader(in);
  reader.expect_header(config_columns());
  std::vector<SystemConfiguration> out;
  std::vector<std::string_view> fields;
  while (reader.next(fields)) {
    detail::check_field_count(fields, config_columns().size(), reader.line_number());
    auto c = detail::parse_config_fields(fields, reader.line_number());
    if (auto bad = c.violation()) throw ParseError(reader.line_number(), "row", *bad);
    out.push_back(c);
  }
  return out;
}

inline void cmd_predict(const PredictOptions& o) {
  const auto models = load_bundle(o.model);
  std::vector<SystemConfiguration> configs;
  {
    auto in = csv::open_input(o.configs_csv);
    configs = read_configurations(in);
  }
  ensure_parent(o.out);
  auto out = csv::open_output(o.out);
  for (auto c : config_columns()) out << c << ',';
  out << "method,response,prediction,fallback\n";
  for (const auto& c : configs) {
    const auto key = VariabilityMapKey::of(c);
    bool any = false;
    for (const auto& m : models) {
      if (!m.accepts(key)) continue;
      any = true;
      const auto p = m.predict_detailed(encode_point(c), key);
      detail::write_config_fields(out, c);
      out << ',' << to_string(m.spec().kind) << ',' << (m.response() == Response::Variability ? "pvm" : "mean_throughput")
          << ',' << csv::format(p.value) << ',' << (p.fallback ? "true" : "false") << '\n';
    }
    if (!any) throw Error("no model in '" + o.model + "' covers " + to_string(key));
  }
  if (!out) throw Error("failed writing '" + o.out + "'");
  out.close();
  write_manifest({.command = "predict", .inputs = {o.model, o.configs_csv}, .outputs = {o.out}}, o.out);
}

struct EvaluateOptions {
  std::string observations_csv;
  std::string split_spec = "iozone";
  std::vector<ModelKind> methods = {ModelKind::LM, ModelKind::LSP, ModelKind::MARS};
  BenchmarkMode mode = BenchmarkMode::Interpolation;
  ResponseScale scale = ResponseScale::Log;
  std::uint64_t seed = kDefaultSeed;
  unsigned jobs = 0;
  std::string out_dir;
};

/// Writes <out_dir>/report.csv and <out_dir>/ratios.csv; returns the reports.
inline std::vector<ErrorReport> cmd_evaluate(const EvaluateOptions& o) {
  const auto obs = read_observations_csv(o.observations_csv);
  const auto split = split_dataset(obs, read_split_spec(o.split_spec));
  spdlog::info("split: {} training, {} interpolation, {} extrapolation points", split.training.size(),
               split.interpolation_test.size(), split.extrapolation_test.size());
  if (o.mode == BenchmarkMode::Extrapolation && o.scale != ResponseScale::Raw)
    spdlog::info("extrapolation models the raw response scale");
  const auto specs = make_specs(o.methods, o.scale, o.seed);
  const auto reports = run_benchmark(specs, split, o.mode, o.jobs);
  for (const auto& r : reports)
    spdlog::info("{} {}: n={} ER1={} ER2={} ER3={}", r.method, r.mode, r.n, csv::format(r.er1, 4),
                 csv::format(r.er2, 4), csv::format(r.er3, 4));

  std::filesystem::create_directories(o.out_dir);
  const std::string report = (std::filesystem::path(o.out_dir) / "report.csv").string();
  const std::string ratios = (std::filesystem::path(o.out_dir) / "ratios.csv").string();
  export_reports(reports, report);
  export_ratio_distribution(reports, ratios);
  RunManifest m{.command = "evaluate", .inputs = {o.observations_csv}, .outputs = {report, ratios},
                .models = spec_names(specs), .split_spec = o.split_spec, .seed = o.seed};
  m.settings["mode"] = std::string(to_string(o.mode));
  m.settings["response_scale"] =
      std::string(to_string(o.mode == BenchmarkMode::Extrapolation ? ResponseScale::Raw : o.scale));
  write_manifest(m, report);
  return reports;
}

struct OptimizeOptions {
  std::string observations_csv;
  std::string problem_config;  // empty: defaults
  std::uint64_t seed = kDefaultSeed;
  unsigned jobs = 0;
  std::string out;
};

inline std::vector<OptimizationResult> cmd_optimize(const OptimizeOptions& o) {
  ProblemConfig cfg = o.problem_config.empty() ? ProblemConfig{} : read_problem_config(o.problem_config);
  cfg.model.cgp.seed = o.seed;
  const auto obs = read_observations_csv(o.observations_csv);
  const auto rows = optimize_all_modes(obs, cfg, o.jobs);
  std::size_t infeasible = 0;
  for (const auto& r : rows)
    if (r.has_data && !r.feasible) ++infeasible;
  if (infeasible > 0) spdlog::warn("{} mode(s) have no feasible scheduler pair", infeasible);
  ensure_parent(o.out);
  {
    auto out = csv::open_output(o.out);
    write_optimization_csv(out, rows);
    if (!out) throw Error("failed writing '" + o.out + "'");
  }
  RunManifest m{.command = "optimize", .inputs = {o.observations_csv}, .outputs = {o.out},
                .models = {std::string(to_string(cfg.model.kind)) + ":" + std::string(to_string(cfg.model.response_scale))},
                .seed = o.seed};
  if (!o.problem_config.empty()) m.inputs.push_back(o.problem_config);
  m.settings = {{"c", cfg.c},
                {"budget", cfg.budget},
                {"m0_rule", cfg.m0_rule.to_string()},
                {"solver", std::string(to_string(cfg.solver))}};
  write_manifest(m, o.out);
  return rows;
}

/// Which configuration variable a plot axis sweeps.
enum class PlotAxis : std::uint8_t { FileSize, RecordSize, Threads, Frequency };

inline PlotAxis parse_plot_axis(std::string_view text) {
  if (detail::iequals(text, "file_size_kb")) return PlotAxis::FileSize;
  if (detail::iequals(text, "record_size_kb")) return PlotAxis::RecordSize;
  if (detail::iequals(text, "threads")) return PlotAxis::Threads;
  if (detail::iequals(text, "frequency_ghz")) return PlotAxis::Frequency;
  throw Error("unknown plot axis '" + std::string(text) +
              "' (expected file_size_kb, record_size_kb, threads or frequency_ghz)");
}

struct PlotOptions {
  std::string model;
  std::string key;  // e.g. Fread/CFQ/NOOP
  std::string x_axis = "threads";
  std::string y_axis = "frequency_ghz";
  std::array<double, 2> x_range{1, 256};
  std::array<double, 2> y_range{1.2, 3.0};
  int points = 25;
  // Values of the two variables not swept.
  double file_size_kb = 1024, record_size_kb = 32, threads = 16, frequency_ghz = 2.5;
  std::string out;
};

inline VariabilityMapKey parse_key(std::string_view text) {
  const auto parts = csv::split(text, '/');
  if (parts.size() == 3) {
    auto mode = parse_io_mode(csv::trim(parts[0]));
    auto io = parse_scheduler(csv::trim(parts[1]));
    auto vm = parse_scheduler(csv::trim(parts[2]));
    if (mode && io && vm) return {*mode, *io, *vm};
  }
  throw Error("bad map key '" + std::string(text) + "' (expected MODE/IO_SCHEDULER/VM_IO_SCHEDULER)");
}

/// Cross-section of one map's fitted surface on a grid that is uniform in the
/// encoded coordinates (log scale for sizes and threads).
inline void cmd_export_plot_data(const PlotOptions& o) {
  if (o.points < 2) throw Error("export-plot-data: need at least 2 points per axis");
  const auto key = parse_key(o.key);
  const auto ax = parse_plot_axis(o.x_axis);
  const auto ay = parse_plot_axis(o.y_axis);
  if (ax == ay) throw Error("export-plot-data: the two axes must differ");
  const auto models = load_bundle(o.model);

  auto encode = [](PlotAxis a, double v) {
    if (!(v > 0.0)) throw Error("export-plot-data: axis values must be positive");
    return a == PlotAxis::Frequency ? v : std::log(v);
  };
  auto decode = [](PlotAxis a, double t) { return a == PlotAxis::Frequency ? t : std::exp(t); };
  ContinuousPoint base{{encode(PlotAxis::FileSize, o.file_size_kb), encode(PlotAxis::RecordSize, o.record_size_kb),
                        encode(PlotAxis::Threads, o.threads), o.frequency_ghz}};

  ensure_parent(o.out);
  auto out = csv::open_output(o.out);
  out << "method,file_size_kb,record_size_kb,threads,frequency_ghz,prediction,fallback\n";
  bool any = false;
  for (const auto& m : models) {
    if (!m.accepts(key)) continue;
    any = true;
    const double x0 = encode(ax, o.x_range[0]), x1 = encode(ax, o.x_range[1]);
    const double y0 = encode(ay, o.y_range[0]), y1 = encode(ay, o.y_range[1]);
    for (int i = 0; i < o.points; ++i)
      for (int j = 0; j < o.points; ++j) {
        ContinuousPoint p = base;
        p[static_cast<std::size_t>(ax)] = x0 + (x1 - x0) * i / (o.points - 1);
        p[static_cast<std::size_t>(ay)] = y0 + (y1 - y0) * j / (o.points - 1);
        const auto pred = m.predict_detailed(p, key);
        out << to_string(m.spec().kind);
        for (std::size_t d = 0; d < kDims; ++d) out << ',' << csv::format(decode(static_cast<PlotAxis>(d), p[d]));
        out << ',' << csv::format(pred.value) << ',' << (pred.fallback ? "true" : "false") << '\n';
      }
  }
  if (!any) throw Error("no model in '" + o.model + "' covers " + to_string(key));
  if (!out) throw Error("failed writing '" + o.out + "'");
  out.close();
  RunManifest m{.command = "export-plot-data", .inputs = {o.model}, .outputs = {o.out}};
  m.settings = {{"key", to_string(key)}, {"x", o.x_axis}, {"y", o.y_axis}, {"points", o.points}};
  write_manifest(m, o.out);
}

struct SynthOptions {
  std::uint64_t seed = kDefaultSeed;
  bool runs = false;  // write raw runs instead of observations
  std::string out;
  std::string split_out;  // optional: also write the matching split spec
};

inline void cmd_synth(const SynthOptions& o) {
  synthetic::Options so;
  so.seed = o.seed;
  ensure_parent(o.out);
  {
    auto out = csv::open_output(o.out);
    if (o.runs)
      write_runs_csv(out, synthetic::runs(so));
    else
      write_observations_csv(out, synthetic::observations(so));
    if (!out) throw Error("failed writing '" + o.out + "'");
  }
  RunManifest m{.command = "synth", .outputs = {o.out}, .seed = o.seed};
  if (!o.split_out.empty()) {
    ensure_parent(o.split_out);
    auto out = csv::open_output(o.split_out);
    out << synthetic::kSplitSpec;
    if (!out) throw Error("failed writing '" + o.split_out + "'");
    m.outputs.push_back(o.split_out);
  }
  write_manifest(m, o.out);
}

}  // namespace vmap::cli
