#pragma once

// Maps a continuous optimum back to a runnable configuration: the file size
// must be an integer multiple of an integer record size, threads an integer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "vmap/types.hpp"

namespace vmap {

struct RoundedConfiguration {
  std::int64_t file_size_kb = 1;
  std::int64_t record_size_kb = 1;
  std::int64_t threads = 1;
  double frequency_ghz = 1.0;
};

/// Window half-width, as a fraction of the decoded value, for the
/// record size and file size searches.
inline constexpr double kRoundingWindow = 0.5;

/// Squared distance in (ln F, ln R).
inline double rounding_distance(double file, double record, std::int64_t f, std::int64_t r) {
  const double a = std::log(static_cast<double>(f)) - std::log(file);
  const double b = std::log(static_cast<double>(r)) - std::log(record);
  return a * a + b * b;
}

/// Nearest (F', R') with F' = q R', q >= 1, R' within +-50% of R and F' within
/// +-50% of F. If no pair fits the file window (F far below R), the file
/// window is dropped. Ties go to the smaller R', then the smaller q.
inline RoundedConfiguration round_solution(const ContinuousPoint& x) {
  const double file = std::exp(x.log_file_size());
  const double record = std::exp(x.log_record_size());
  const auto r_lo = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor((1.0 - kRoundingWindow) * record)));
  const auto r_hi = std::max<std::int64_t>(r_lo, static_cast<std::int64_t>(std::ceil((1.0 + kRoundingWindow) * record)));
  const double f_lo = (1.0 - kRoundingWindow) * file;
  const double f_hi = (1.0 + kRoundingWindow) * file;

  RoundedConfiguration out;
  for (int pass = 0; pass < 2; ++pass) {
    const bool windowed = pass == 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t r = r_lo; r <= r_hi; ++r) {
      const double ratio = file / static_cast<double>(r);
      const auto q_floor = static_cast<std::int64_t>(std::floor(ratio));
      for (std::int64_t q : {q_floor, q_floor + 1}) {
        if (q < 1) continue;
        const std::int64_t f = q * r;
        if (windowed && (static_cast<double>(f) < f_lo || static_cast<double>(f) > f_hi)) continue;
        const double d = rounding_distance(file, record, f, r);
        if (d < best) {
          best = d;
          out.file_size_kb = f;
          out.record_size_kb = r;
        }
      }
    }
    if (best < std::numeric_limits<double>::infinity()) break;
  }
  out.threads = std::max<std::int64_t>(1, std::llround(std::exp(x.log_threads())));
  out.frequency_ghz = x.frequency();
  return out;
}

}  // namespace vmap
