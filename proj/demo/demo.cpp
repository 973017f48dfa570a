// Library walk-through on the synthetic dataset: split, benchmark three
// methods, then pick a low-variability configuration for each IO mode.

#include <iomanip>
#include <iostream>

#include "vmap/evaluation.hpp"
#include "vmap/optimizer/design.hpp"
#include "vmap/synthetic.hpp"

int main() {
  using namespace vmap;

  const auto observations = synthetic::observations();
  const auto split = split_dataset(observations, synthetic::split_spec());
  std::cout << observations.size() << " observations: " << split.training.size() << " training, "
            << split.interpolation_test.size() << " interpolation, " << split.extrapolation_test.size()
            << " extrapolation\n\n";

  const std::vector<ModelSpec> methods = {ModelSpec::of(ModelKind::LM), ModelSpec::of(ModelKind::LSP),
                                          ModelSpec::of(ModelKind::MARS)};
  for (auto mode : {BenchmarkMode::Interpolation, BenchmarkMode::Extrapolation}) {
    std::cout << to_string(mode) << '\n';
    for (const auto& r : run_benchmark(methods, split, mode))
      std::cout << "  " << std::setw(5) << r.method << "  n=" << r.n << "  ER1=" << csv::format(r.er1, 4)
                << "  ER2=" << csv::format(r.er2, 4) << "  ER3=" << csv::format(r.er3, 4) << '\n';
  }

  std::cout << "\nrecommended configurations (LSP surrogates, m0 = per-map mean throughput)\n";
  ProblemConfig cfg;
  cfg.budget = 1000;
  for (const auto& r : optimize_all_modes(observations, cfg)) {
    if (!r.has_data) continue;
    const auto& c = r.config_star;
    std::cout << "  " << to_string(r.key) << "  file=" << c.file_size_kb << " record=" << c.record_size_kb
              << " threads=" << c.threads << " freq=" << csv::format(c.frequency_ghz, 4)
              << "  pvm=" << csv::format(r.objective_value, 4) << "  mean=" << csv::format(r.constraint_value, 4)
              << " (m0 " << csv::format(r.m0, 4) << ")" << (r.feasible ? "" : "  infeasible") << '\n';
  }
}
