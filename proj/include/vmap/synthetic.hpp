#pragma once

// Small synthetic stand-in for the IOzone study: a factorial grid whose
// variability grows smoothly and nonlinearly with frequency and thread count.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "vmap/dataspace.hpp"
#include "vmap/types.hpp"

namespace vmap::synthetic {

struct Options {
  std::uint64_t seed = 20190723;
  std::vector<IoMode> modes = {IoMode::Fread, IoMode::Fwrite};
  double noise = 0.05;             // relative noise on the variability
  double throughput_noise = 0.02;  // relative noise on the mean throughput
  int runs = 5;                    // runs per configuration for synthesize_runs
};

inline const std::vector<double>& frequencies() {
  static const std::vector<double> v = {1.2, 1.6, 2.0, 2.5, 3.0};
  return v;
}
inline const std::vector<std::int64_t>& threads() {
  static const std::vector<std::int64_t> v = {1, 4, 16, 64, 256};
  return v;
}
inline const std::vector<std::pair<std::int64_t, std::int64_t>>& file_record_pairs() {
  static const std::vector<std::pair<std::int64_t, std::int64_t>> v = {{64, 32}, {1024, 32}, {1024, 512}};
  return v;
}
inline const std::vector<std::pair<std::int64_t, std::int64_t>>& probe_pairs() {
  static const std::vector<std::pair<std::int64_t, std::int64_t>> v = {{256, 32}, {512, 128}, {1024, 128}};
  return v;
}

/// Interpolation probes sit at unseen file/record pairs in the middle of the
/// thread and frequency ranges; extrapolation points are high corners of one pair.
inline constexpr std::string_view kSplitSpec = R"([interpolation]
file_size_kb,record_size_kb = (256,32) (512,128) (1024,128)
threads = 16
frequency_ghz = 2.0

[extrapolation]
file_size_kb,record_size_kb = (1024,32)
frequency_ghz,threads = (3.0,256) (3.0,64) (2.5,256)
)";

inline SplitSpec split_spec() { return parse_split_spec(kSplitSpec); }

inline double mode_factor(IoMode m) { return 1.0 + 0.15 * static_cast<double>(static_cast<int>(m) % 5); }

inline double scheduler_factor(Scheduler s) {
  switch (s) {
    case Scheduler::CFQ: return 1.0;
    case Scheduler::DEAD: return 1.2;
    case Scheduler::NOOP: return 0.85;
  }
  return 1.0;
}

/// Noise-free variability (KB/s).
inline double true_pvm(const SystemConfiguration& c) {
  const double t = static_cast<double>(c.threads);
  const double f = c.frequency_ghz;
  const double ratio = std::log(static_cast<double>(c.file_size_kb) / static_cast<double>(c.record_size_kb));
  return 2e5 * mode_factor(c.io_mode) * scheduler_factor(c.io_scheduler) * scheduler_factor(c.vm_io_scheduler) *
         std::pow(1.0 + t / 8.0, 0.8) * std::exp(1.2 * (f - 1.2) * (f - 1.2) / 1.8) * std::exp(0.1 * ratio);
}

/// Noise-free mean throughput (KB/s); does not depend on the schedulers.
inline double true_mean_throughput(const SystemConfiguration& c) {
  const double t = static_cast<double>(c.threads);
  return 1e6 * mode_factor(c.io_mode) * std::pow(1.0 + t, 0.6) * std::pow(c.frequency_ghz, 1.2) *
         std::exp(0.1 * std::log(static_cast<double>(c.record_size_kb)));
}

/// Grid configurations followed by the interpolation probes.
inline std::vector<SystemConfiguration> configurations(const Options& o = {}) {
  std::vector<SystemConfiguration> out;
  for (auto mode : o.modes)
    for (auto io : kAllSchedulers)
      for (auto vm : kAllSchedulers) {
        for (double f : frequencies())
          for (auto t : threads())
            for (auto [file, record] : file_record_pairs()) out.push_back({mode, io, vm, f, t, file, record});
        for (auto [file, record] : probe_pairs()) out.push_back({mode, io, vm, 2.0, 16, file, record});
      }
  return out;
}

inline std::vector<VariabilityObservation> observations(const Options& o = {}) {
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<VariabilityObservation> out;
  for (const auto& c : configurations(o)) {
    VariabilityObservation obs;
    obs.config = c;
    obs.point = encode_point(c);
    obs.n_runs = o.runs;
    obs.pvm_kb_s = true_pvm(c) * std::max(0.5, 1.0 + o.noise * normal(rng));
    obs.mean_throughput_kb_s = true_mean_throughput(c) * std::max(0.5, 1.0 + o.throughput_noise * normal(rng));
    out.push_back(obs);
  }
  return out;
}

/// Raw runs whose per-configuration sample mean and standard deviation equal
/// the values of observations(o), up to rounding.
inline std::vector<RunRecord> runs(const Options& o = {}) {
  if (o.runs < 2) throw Error("synthetic runs: need at least two runs per configuration");
  std::mt19937_64 rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<RunRecord> out;
  const auto n = static_cast<std::size_t>(o.runs);
  std::vector<double> z(n);
  for (const auto& obs : observations(o)) {
    // Standardise the draws to mean 0 and sample variance 1.
    double mean = 0.0;
    for (auto& v : z) mean += (v = normal(rng));
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (auto& v : z) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    for (double v : z)
      out.push_back({obs.config, obs.mean_throughput_kb_s + obs.pvm_kb_s * (v - mean) / sd});
  }
  return out;
}

}  // namespace vmap::synthetic
