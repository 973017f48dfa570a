#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vmap {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised while reading a text input; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string_view field, const std::string& what)
      : Error("line " + std::to_string(line) + ", field '" + std::string(field) +
              "': " + what),
        line_(line),
        field_(field) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// IOzone operation modes. Order matches the optimization report tables.
enum class IoMode : std::uint8_t {
  Fread,
  Fwrite,
  Initialwrite,
  Mixedworkload,
  Pread,
  Pwrite,
  Randomread,
  Randomwrite,
  Reread,
  Read,
  ReverseRead,
  Rewrite,
  Strideread,
};

enum class Scheduler : std::uint8_t { CFQ, DEAD, NOOP };

inline constexpr std::size_t kIoModeCount = 13;
inline constexpr std::size_t kSchedulerCount = 3;
inline constexpr std::size_t kMapCount = kIoModeCount * kSchedulerCount * kSchedulerCount;

inline constexpr std::array<IoMode, kIoModeCount> kAllIoModes = {
    IoMode::Fread,      IoMode::Fwrite,     IoMode::Initialwrite, IoMode::Mixedworkload,
    IoMode::Pread,      IoMode::Pwrite,     IoMode::Randomread,   IoMode::Randomwrite,
    IoMode::Reread,     IoMode::Read,       IoMode::ReverseRead,  IoMode::Rewrite,
    IoMode::Strideread};

inline constexpr std::array<Scheduler, kSchedulerCount> kAllSchedulers = {
    Scheduler::CFQ, Scheduler::DEAD, Scheduler::NOOP};

namespace detail {

inline constexpr std::array<std::string_view, kIoModeCount> kIoModeNames = {
    "Fread",  "Fwrite",     "Initialwrite", "Mixedworkload", "Pread",
    "Pwrite", "Randomread", "Randomwrite",  "Re-read",       "Read",
    "ReverseRead", "Rewrite", "Strideread"};

inline constexpr std::array<std::string_view, kSchedulerCount> kSchedulerNames = {"CFQ", "DEAD",
                                                                                   "NOOP"};

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto lower = [](char c) { return (c >= 'A' && c <= 'Z') ? char(c - 'A' + 'a') : c; };
    if (lower(a[i]) != lower(b[i])) return false;
  }
  return true;
}

}  // namespace detail

inline std::string_view to_string(IoMode mode) {
  return detail::kIoModeNames[static_cast<std::size_t>(mode)];
}

inline std::string_view to_string(Scheduler s) {
  return detail::kSchedulerNames[static_cast<std::size_t>(s)];
}

/// Case-insensitive; "Reread" is accepted for "Re-read".
inline std::optional<IoMode> parse_io_mode(std::string_view text) {
  for (std::size_t i = 0; i < kIoModeCount; ++i) {
    if (detail::iequals(text, detail::kIoModeNames[i])) return kAllIoModes[i];
  }
  if (detail::iequals(text, "Reread")) return IoMode::Reread;
  return std::nullopt;
}

inline std::optional<Scheduler> parse_scheduler(std::string_view text) {
  for (std::size_t i = 0; i < kSchedulerCount; ++i) {
    if (detail::iequals(text, detail::kSchedulerNames[i])) return kAllSchedulers[i];
  }
  if (detail::iequals(text, "DEADLINE")) return Scheduler::DEAD;
  return std::nullopt;
}

/// One system setup: three categorical factors and four numeric ones.
struct SystemConfiguration {
  IoMode io_mode = IoMode::Fread;
  Scheduler io_scheduler = Scheduler::CFQ;
  Scheduler vm_io_scheduler = Scheduler::CFQ;
  double frequency_ghz = 1.0;
  std::int64_t threads = 1;
  std::int64_t file_size_kb = 1;
  std::int64_t record_size_kb = 1;

  auto operator<=>(const SystemConfiguration&) const = default;
  bool operator==(const SystemConfiguration&) const = default;

  /// Empty when valid, otherwise a description of the first violated rule.
  std::optional<std::string> violation() const {
    if (!(frequency_ghz > 0.0) || frequency_ghz == std::numeric_limits<double>::infinity())
      return "frequency must be positive and finite";
    if (threads < 1) return "threads must be a positive integer";
    if (record_size_kb < 1) return "record size must be a positive integer";
    if (file_size_kb < record_size_kb) return "file size must be >= record size";
    if (file_size_kb % record_size_kb != 0) return "file size must be a multiple of record size";
    return std::nullopt;
  }

  bool valid() const { return !violation().has_value(); }
};

inline std::string describe(const SystemConfiguration& c) {
  return std::string(to_string(c.io_mode)) + "/" + std::string(to_string(c.io_scheduler)) + "/" +
         std::string(to_string(c.vm_io_scheduler)) + " freq=" + std::to_string(c.frequency_ghz) +
         " threads=" + std::to_string(c.threads) + " file=" + std::to_string(c.file_size_kb) +
         " record=" + std::to_string(c.record_size_kb);
}

struct RunRecord {
  SystemConfiguration config;
  double throughput_kb_s = 0.0;
};

/// Categorical triple identifying one variability map.
struct VariabilityMapKey {
  IoMode io_mode = IoMode::Fread;
  Scheduler io_scheduler = Scheduler::CFQ;
  Scheduler vm_io_scheduler = Scheduler::CFQ;

  auto operator<=>(const VariabilityMapKey&) const = default;
  bool operator==(const VariabilityMapKey&) const = default;

  static VariabilityMapKey of(const SystemConfiguration& c) {
    return {c.io_mode, c.io_scheduler, c.vm_io_scheduler};
  }

  /// Dense index in [0, 117).
  std::size_t index() const {
    return (static_cast<std::size_t>(io_mode) * kSchedulerCount +
            static_cast<std::size_t>(io_scheduler)) *
               kSchedulerCount +
           static_cast<std::size_t>(vm_io_scheduler);
  }

  static VariabilityMapKey from_index(std::size_t i) {
    return {kAllIoModes[i / (kSchedulerCount * kSchedulerCount)],
            kAllSchedulers[(i / kSchedulerCount) % kSchedulerCount],
            kAllSchedulers[i % kSchedulerCount]};
  }
};

inline std::string to_string(const VariabilityMapKey& k) {
  return std::string(to_string(k.io_mode)) + "/" + std::string(to_string(k.io_scheduler)) + "/" +
         std::string(to_string(k.vm_io_scheduler));
}

inline constexpr std::size_t kDims = 4;

/// Encoded configuration: (ln file size, ln record size, ln threads, frequency).
struct ContinuousPoint {
  std::array<double, kDims> coords{};

  double& operator[](std::size_t i) { return coords[i]; }
  double operator[](std::size_t i) const { return coords[i]; }

  double log_file_size() const { return coords[0]; }
  double log_record_size() const { return coords[1]; }
  double log_threads() const { return coords[2]; }
  double frequency() const { return coords[3]; }

  bool operator==(const ContinuousPoint&) const = default;
};

struct VariabilityObservation {
  SystemConfiguration config;
  ContinuousPoint point;
  double pvm_kb_s = 0.0;
  double mean_throughput_kb_s = 0.0;
  std::int64_t n_runs = 0;

  VariabilityMapKey key() const { return VariabilityMapKey::of(config); }
};

enum class ResponseScale : std::uint8_t { Log, Raw };

inline std::string_view to_string(ResponseScale s) { return s == ResponseScale::Log ? "log" : "raw"; }

inline std::optional<ResponseScale> parse_response_scale(std::string_view text) {
  if (detail::iequals(text, "log")) return ResponseScale::Log;
  if (detail::iequals(text, "raw")) return ResponseScale::Raw;
  return std::nullopt;
}

/// Which observed quantity a surrogate models.
enum class Response : std::uint8_t { Variability, MeanThroughput };

inline double response_of(const VariabilityObservation& o, Response r) {
  return r == Response::Variability ? o.pvm_kb_s : o.mean_throughput_kb_s;
}

}  // namespace vmap
