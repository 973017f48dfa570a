// vmap: fit, compare and optimise performance variability maps.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "vmap/cli/commands.hpp"

namespace {

using namespace vmap;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("vmap");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("VMAP_LOG")) spdlog::cfg::helpers::load_levels(level);
}

template <class Parse>
auto checked(Parse parse, const char* what) {
  return [parse, what](const std::string& text) -> std::string {
    if (!parse(text)) return std::string("invalid ") + what + " '" + text + "'";
    return {};
  };
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Performance variability maps: fit surrogates, benchmark them, optimise configurations"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::uint64_t seed = cli::kDefaultSeed;
  unsigned jobs = 0;
  std::string methods = "LM,LSP,MARS";
  std::string mode = "interpolation";
  std::string scale = "log";
  std::string split_spec = "iozone";
  std::string out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed (default 20190723)");
    sub->add_option("--jobs", jobs, "worker threads; 0 uses every core")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", out, "output path")->required();
  };

  cli::IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "reduce a runs CSV to one observation per configuration");
  ingest_cmd->add_option("runs", ingest.runs_csv, "runs CSV")->required()->check(CLI::ExistingFile);
  add_common(ingest_cmd);

  cli::FitOptions fit;
  bool fit_performance = false;
  std::string fit_split;
  auto* fit_cmd = app.add_subcommand("fit", "fit one model per variability map and save them as JSON");
  fit_cmd->add_option("observations", fit.observations_csv, "observations CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--methods", methods, "comma-separated methods: LM, GAMGLM, LSP, MARS, CGP");
  fit_cmd->add_option("--scale", scale, "response scale: log or raw")
      ->check(checked(parse_response_scale, "scale"));
  fit_cmd->add_option("--split-spec", fit_split, "fit on the training part of this split ('iozone' for the built-in)");
  fit_cmd->add_flag("--performance", fit_performance, "model mean throughput instead of variability");
  add_common(fit_cmd);

  cli::PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "predict for the configurations in a CSV");
  predict_cmd->add_option("model", predict.model, "model bundle JSON")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("configs", predict.configs_csv, "configurations CSV")->required()->check(CLI::ExistingFile);
  add_common(predict_cmd);

  cli::EvaluateOptions evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "benchmark methods on an interpolation or extrapolation split");
  evaluate_cmd->add_option("observations", evaluate.observations_csv, "observations CSV")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--methods", methods, "comma-separated methods: LM, GAMGLM, LSP, MARS, CGP");
  evaluate_cmd->add_option("--mode", mode, "interpolation or extrapolation")
      ->check(checked(parse_benchmark_mode, "mode"));
  evaluate_cmd->add_option("--scale", scale, "response scale for interpolation: log or raw")
      ->check(checked(parse_response_scale, "scale"));
  evaluate_cmd->add_option("--split-spec", split_spec, "split spec file, or 'iozone' for the built-in");
  add_common(evaluate_cmd);
  evaluate_cmd->get_option("--out")->description("output directory");

  cli::OptimizeOptions optimize;
  auto* optimize_cmd = app.add_subcommand("optimize", "choose the least-variability configuration per IO mode");
  optimize_cmd->add_option("observations", optimize.observations_csv, "observations CSV")
      ->required()
      ->check(CLI::ExistingFile);
  optimize_cmd->add_option("--config", optimize.problem_config, "problem configuration file")
      ->check(CLI::ExistingFile);
  add_common(optimize_cmd);

  cli::PlotOptions plot;
  auto* plot_cmd = app.add_subcommand("export-plot-data", "export a two-variable cross-section of a fitted map");
  plot_cmd->add_option("model", plot.model, "model bundle JSON")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--key", plot.key, "map key MODE/IO_SCHEDULER/VM_IO_SCHEDULER")->required();
  plot_cmd->add_option("--x", plot.x_axis, "swept variable on the first axis");
  plot_cmd->add_option("--y", plot.y_axis, "swept variable on the second axis");
  plot_cmd->add_option("--x-range", plot.x_range, "first-axis range (two values)");
  plot_cmd->add_option("--y-range", plot.y_range, "second-axis range (two values)");
  plot_cmd->add_option("--points", plot.points, "grid points per axis");
  plot_cmd->add_option("--file-size", plot.file_size_kb, "file size (KB) when not swept");
  plot_cmd->add_option("--record-size", plot.record_size_kb, "record size (KB) when not swept");
  plot_cmd->add_option("--threads", plot.threads, "threads when not swept");
  plot_cmd->add_option("--frequency", plot.frequency_ghz, "frequency (GHz) when not swept");
  add_common(plot_cmd);

  cli::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "write the synthetic demonstration dataset");
  synth_cmd->add_flag("--runs", synth.runs, "write raw runs instead of observations");
  synth_cmd->add_option("--split-out", synth.split_out, "also write the matching split spec here");
  add_common(synth_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*ingest_cmd) {
      ingest.out = out;
      cli::cmd_ingest(ingest);
    } else if (*fit_cmd) {
      fit.methods = cli::parse_methods(methods);
      fit.scale = *parse_response_scale(scale);
      fit.split_spec = fit_split;
      fit.performance = fit_performance;
      fit.seed = seed;
      fit.jobs = jobs;
      fit.out = out;
      cli::cmd_fit(fit);
    } else if (*predict_cmd) {
      predict.out = out;
      cli::cmd_predict(predict);
    } else if (*evaluate_cmd) {
      evaluate.methods = cli::parse_methods(methods);
      evaluate.mode = *parse_benchmark_mode(mode);
      evaluate.scale = *parse_response_scale(scale);
      evaluate.split_spec = split_spec;
      evaluate.seed = seed;
      evaluate.jobs = jobs;
      evaluate.out_dir = out;
      cli::cmd_evaluate(evaluate);
    } else if (*optimize_cmd) {
      optimize.seed = seed;
      optimize.jobs = jobs;
      optimize.out = out;
      cli::cmd_optimize(optimize);
    } else if (*plot_cmd) {
      plot.out = out;
      cli::cmd_export_plot_data(plot);
    } else if (*synth_cmd) {
      synth.seed = seed;
      synth.out = out;
      cli::cmd_synth(synth);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
