#pragma once

// Run ingestion, variability measure, feature encoding and train/test splits.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vmap/csv.hpp"
#include "vmap/types.hpp"

namespace vmap {

inline const std::vector<std::string_view>& config_columns() {
  static const std::vector<std::string_view> cols = {
      "io_mode", "io_scheduler", "vm_io_scheduler", "frequency_ghz",
      "threads", "file_size_kb", "record_size_kb"};
  return cols;
}

inline const std::vector<std::string_view>& runs_columns() {
  static const std::vector<std::string_view> cols = [] {
    auto c = config_columns();
    c.push_back("throughput_kb_s");
    return c;
  }();
  return cols;
}

inline const std::vector<std::string_view>& observations_columns() {
  static const std::vector<std::string_view> cols = [] {
    auto c = config_columns();
    c.insert(c.end(), {"n_runs", "mean_throughput_kb_s", "pvm_kb_s"});
    return c;
  }();
  return cols;
}

namespace detail {

// Parses the seven configuration fields starting at fields[0]. Does not
// check the configuration invariants.
inline SystemConfiguration parse_config_fields(const std::vector<std::string_view>& fields,
                                               std::size_t line) {
  const auto& cols = config_columns();
  SystemConfiguration c;
  auto mode = parse_io_mode(fields[0]);
  if (!mode) throw ParseError(line, cols[0], "unknown IO mode '" + std::string(fields[0]) + "'");
  c.io_mode = *mode;
  auto io = parse_scheduler(fields[1]);
  if (!io) throw ParseError(line, cols[1], "unknown scheduler '" + std::string(fields[1]) + "'");
  c.io_scheduler = *io;
  auto vm = parse_scheduler(fields[2]);
  if (!vm) throw ParseError(line, cols[2], "unknown scheduler '" + std::string(fields[2]) + "'");
  c.vm_io_scheduler = *vm;
  auto freq = csv::parse_double(fields[3]);
  if (!freq) throw ParseError(line, cols[3], "not a number: '" + std::string(fields[3]) + "'");
  c.frequency_ghz = *freq;
  auto threads = csv::parse_int(fields[4]);
  if (!threads) throw ParseError(line, cols[4], "not an integer: '" + std::string(fields[4]) + "'");
  c.threads = *threads;
  auto file = csv::parse_int(fields[5]);
  if (!file) throw ParseError(line, cols[5], "not an integer: '" + std::string(fields[5]) + "'");
  c.file_size_kb = *file;
  auto record = csv::parse_int(fields[6]);
  if (!record) throw ParseError(line, cols[6], "not an integer: '" + std::string(fields[6]) + "'");
  c.record_size_kb = *record;
  return c;
}

inline void write_config_fields(std::ostream& out, const SystemConfiguration& c) {
  out << to_string(c.io_mode) << ',' << to_string(c.io_scheduler) << ','
      << to_string(c.vm_io_scheduler) << ',' << csv::format(c.frequency_ghz) << ',' << c.threads
      << ',' << c.file_size_kb << ',' << c.record_size_kb;
}

inline void check_field_count(const std::vector<std::string_view>& fields, std::size_t expected,
                              std::size_t line) {
  if (fields.size() != expected)
    throw ParseError(line, "row",
                     "expected " + std::to_string(expected) + " fields, got " +
                         std::to_string(fields.size()));
}

}  // namespace detail

/// Parses a runs CSV stream. Rows violating the configuration invariants or
/// with a nonpositive throughput are rejected with an error naming the row.
inline std::vector<RunRecord> ingest_runs(std::istream& in) {
  csv::Reader reader(in);
  reader.expect_header(runs_columns());
  std::vector<RunRecord> records;
  std::vector<std::string_view> fields;
  while (reader.next(fields)) {
    const auto line = reader.line_number();
    detail::check_field_count(fields, runs_columns().size(), line);
    RunRecord r;
    r.config = detail::parse_config_fields(fields, line);
    if (auto why = r.config.violation())
      throw ParseError(line, "config", "invalid configuration (" + describe(r.config) + "): " + *why);
    auto tp = csv::parse_double(fields[7]);
    if (!tp) throw ParseError(line, "throughput_kb_s", "not a number: '" + std::string(fields[7]) + "'");
    if (!(*tp > 0.0) || !std::isfinite(*tp))
      throw ParseError(line, "throughput_kb_s",
                       "throughput must be positive, got '" + std::string(fields[7]) + "'");
    r.throughput_kb_s = *tp;
    records.push_back(r);
  }
  return records;
}

inline std::vector<RunRecord> read_runs_csv(const std::string& path) {
  auto in = csv::open_input(path);
  return ingest_runs(in);
}

inline void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs) {
  const auto& cols = runs_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : runs) {
    detail::write_config_fields(out, r.config);
    out << ',' << csv::format(r.throughput_kb_s) << '\n';
  }
}

/// Natural-log encoding of a configuration into the continuous feature space.
inline ContinuousPoint encode_point(const SystemConfiguration& c) {
  return ContinuousPoint{{std::log(static_cast<double>(c.file_size_kb)),
                          std::log(static_cast<double>(c.record_size_kb)),
                          std::log(static_cast<double>(c.threads)), c.frequency_ghz}};
}

/// Groups runs by configuration and reduces each group to its sample standard
/// deviation and mean. Output is ordered by configuration.
inline std::vector<VariabilityObservation> compute_pvm(const std::vector<RunRecord>& records) {
  std::map<SystemConfiguration, std::vector<double>> groups;
  for (const auto& r : records) groups[r.config].push_back(r.throughput_kb_s);

  std::vector<VariabilityObservation> out;
  out.reserve(groups.size());
  for (auto& [config, values] : groups) {
    if (values.size() < 2)
      throw Error("configuration " + describe(config) +
                  " has a single run; at least two are needed for a standard deviation");
    // Sorting fixes the summation order so permuted input gives identical bits.
    std::sort(values.begin(), values.end());
    VariabilityObservation obs;
    obs.config = config;
    obs.point = encode_point(config);
    obs.n_runs = static_cast<std::int64_t>(values.size());
    if (values.front() == values.back()) {
      obs.mean_throughput_kb_s = values.front();
      obs.pvm_kb_s = 0.0;
    } else {
      const double n = static_cast<double>(values.size());
      double sum = 0.0;
      for (double v : values) sum += v;
      const double mean = sum / n;
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      obs.mean_throughput_kb_s = mean;
      obs.pvm_kb_s = std::sqrt(ss / (n - 1.0));
    }
    out.push_back(obs);
  }
  return out;
}

inline void write_observations_csv(std::ostream& out,
                                   const std::vector<VariabilityObservation>& observations) {
  const auto& cols = observations_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& o : observations) {
    detail::write_config_fields(out, o.config);
    out << ',' << o.n_runs << ',' << csv::format(o.mean_throughput_kb_s) << ','
        << csv::format(o.pvm_kb_s) << '\n';
  }
}

inline std::vector<VariabilityObservation> read_observations(std::istream& in) {
  csv::Reader reader(in);
  reader.expect_header(observations_columns());
  std::vector<VariabilityObservation> out;
  std::vector<std::string_view> fields;
  while (reader.next(fields)) {
    const auto line = reader.line_number();
    detail::check_field_count(fields, observations_columns().size(), line);
    VariabilityObservation o;
    o.config = detail::parse_config_fields(fields, line);
    if (auto why = o.config.violation())
      throw ParseError(line, "config", "invalid configuration (" + describe(o.config) + "): " + *why);
    o.point = encode_point(o.config);
    auto n = csv::parse_int(fields[7]);
    if (!n || *n < 2) throw ParseError(line, "n_runs", "n_runs must be an integer >= 2");
    o.n_runs = *n;
    auto mean = csv::parse_double(fields[8]);
    if (!mean || !(*mean > 0.0))
      throw ParseError(line, "mean_throughput_kb_s", "mean throughput must be positive");
    o.mean_throughput_kb_s = *mean;
    auto pvm = csv::parse_double(fields[9]);
    if (!pvm || !(*pvm >= 0.0)) throw ParseError(line, "pvm_kb_s", "pvm must be nonnegative");
    o.pvm_kb_s = *pvm;
    out.push_back(o);
  }
  return out;
}

inline std::vector<VariabilityObservation> read_observations_csv(const std::string& path) {
  auto in = csv::open_input(path);
  return read_observations(in);
}

// ---------------------------------------------------------------------------
// Response transform

inline double transform_response(double y, ResponseScale scale) {
  if (scale == ResponseScale::Raw) return y;
  if (!(y > 0.0)) throw Error("log response scale requires a positive value, got " + csv::format(y));
  return std::log(y);
}

inline double inverse_transform_response(double t, ResponseScale scale) {
  return scale == ResponseScale::Raw ? t : std::exp(t);
}

// ---------------------------------------------------------------------------
// Splits

enum class SplitVariable : std::uint8_t {
  IoMode,
  IoScheduler,
  VmIoScheduler,
  Frequency,
  Threads,
  FileSize,
  RecordSize,
};

inline std::optional<SplitVariable> parse_split_variable(std::string_view name) {
  static const std::pair<std::string_view, SplitVariable> names[] = {
      {"io_mode", SplitVariable::IoMode},          {"io_scheduler", SplitVariable::IoScheduler},
      {"vm_io_scheduler", SplitVariable::VmIoScheduler},
      {"frequency_ghz", SplitVariable::Frequency}, {"frequency", SplitVariable::Frequency},
      {"threads", SplitVariable::Threads},         {"file_size_kb", SplitVariable::FileSize},
      {"file_size", SplitVariable::FileSize},      {"record_size_kb", SplitVariable::RecordSize},
      {"record_size", SplitVariable::RecordSize},
  };
  for (const auto& [n, v] : names)
    if (detail::iequals(n, name)) return v;
  return std::nullopt;
}

/// A value is either numeric or a categorical level name.
using SplitValue = std::variant<double, std::string>;

/// Matches when the tuple of `variables` equals one of `values`.
struct SplitPredicate {
  std::vector<SplitVariable> variables;
  std::vector<std::vector<SplitValue>> values;

  bool matches(const SystemConfiguration& c) const {
    for (const auto& tuple : values) {
      bool all = true;
      for (std::size_t i = 0; i < variables.size() && all; ++i)
        all = value_matches(variables[i], tuple[i], c);
      if (all) return true;
    }
    return false;
  }

 private:
  static bool value_matches(SplitVariable v, const SplitValue& value, const SystemConfiguration& c) {
    auto numeric = [&](double actual) {
      const double* want = std::get_if<double>(&value);
      return want && std::abs(actual - *want) <= 1e-9 * std::max(1.0, std::abs(*want));
    };
    auto level = [&](std::string_view actual) {
      const std::string* want = std::get_if<std::string>(&value);
      return want && detail::iequals(actual, *want);
    };
    switch (v) {
      case SplitVariable::IoMode: {
        const std::string* want = std::get_if<std::string>(&value);
        auto mode = want ? parse_io_mode(*want) : std::nullopt;
        return mode && *mode == c.io_mode;
      }
      case SplitVariable::IoScheduler: return level(to_string(c.io_scheduler));
      case SplitVariable::VmIoScheduler: return level(to_string(c.vm_io_scheduler));
      case SplitVariable::Frequency: return numeric(c.frequency_ghz);
      case SplitVariable::Threads: return numeric(static_cast<double>(c.threads));
      case SplitVariable::FileSize: return numeric(static_cast<double>(c.file_size_kb));
      case SplitVariable::RecordSize: return numeric(static_cast<double>(c.record_size_kb));
    }
    return false;
  }
};

/// Conjunction of predicates.
struct SplitRule {
  std::vector<SplitPredicate> predicates;

  bool matches(const SystemConfiguration& c) const {
    if (predicates.empty()) return false;
    return std::all_of(predicates.begin(), predicates.end(),
                       [&](const SplitPredicate& p) { return p.matches(c); });
  }
};

/// Each test set is the union of its rules.
struct SplitSpec {
  std::vector<SplitRule> interpolation;
  std::vector<SplitRule> extrapolation;

  bool is_interpolation(const SystemConfiguration& c) const {
    return std::any_of(interpolation.begin(), interpolation.end(),
                       [&](const SplitRule& r) { return r.matches(c); });
  }
  bool is_extrapolation(const SystemConfiguration& c) const {
    return std::any_of(extrapolation.begin(), extrapolation.end(),
                       [&](const SplitRule& r) { return r.matches(c); });
  }
};

namespace detail {

inline SplitValue parse_split_value(std::string_view token, std::size_t line) {
  token = csv::trim(token);
  if (token.empty()) throw ParseError(line, "value", "empty value");
  if (auto d = csv::parse_double(token)) return *d;
  return std::string(token);
}

// Splits "(a,b) (c,d)" or "a b c" or "a, b" into value tuples of the given arity.
inline std::vector<std::vector<SplitValue>> parse_value_set(std::string_view rhs, std::size_t arity,
                                                            std::size_t line) {
  std::vector<std::vector<SplitValue>> out;
  std::size_t i = 0;
  auto skip = [&] {
    while (i < rhs.size() && (rhs[i] == ' ' || rhs[i] == '\t' || rhs[i] == ',' || rhs[i] == '{' ||
                              rhs[i] == '}'))
      ++i;
  };
  while (true) {
    skip();
    if (i >= rhs.size()) break;
    std::vector<SplitValue> tuple;
    if (rhs[i] == '(') {
      auto close = rhs.find(')', i);
      if (close == std::string_view::npos) throw ParseError(line, "value", "unbalanced '('");
      for (auto part : csv::split(rhs.substr(i + 1, close - i - 1)))
        tuple.push_back(parse_split_value(part, line));
      i = close + 1;
    } else {
      std::size_t j = i;
      while (j < rhs.size() && rhs[j] != ' ' && rhs[j] != '\t' && rhs[j] != ',' && rhs[j] != '}') ++j;
      tuple.push_back(parse_split_value(rhs.substr(i, j - i), line));
      i = j;
    }
    if (tuple.size() != arity)
      throw ParseError(line, "value",
                       "expected tuples of " + std::to_string(arity) + " values, got " +
                           std::to_string(tuple.size()));
    out.push_back(std::move(tuple));
  }
  if (out.empty()) throw ParseError(line, "value", "empty value set");
  return out;
}

}  // namespace detail

/// Parses the split spec format:
///
///   # comment
///   [interpolation]
///   file_size_kb,record_size_kb = (512,32) (768,128)
///   threads = 128
///
/// Lines inside a section are ANDed; repeated sections form a union.
inline SplitSpec parse_split_spec(std::istream& in) {
  SplitSpec spec;
  std::vector<SplitRule>* section = nullptr;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = csv::trim(text);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ParseError(line, "section", "unterminated section header");
      auto name = csv::trim(text.substr(1, text.size() - 2));
      if (detail::iequals(name, "interpolation"))
        section = &spec.interpolation;
      else if (detail::iequals(name, "extrapolation"))
        section = &spec.extrapolation;
      else
        throw ParseError(line, "section", "unknown section '" + std::string(name) + "'");
      section->emplace_back();
      continue;
    }
    if (!section) throw ParseError(line, "section", "predicate outside of a section");
    auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(line, "predicate", "expected 'variables = values'");
    SplitPredicate pred;
    for (auto name : csv::split(text.substr(0, eq))) {
      auto var = parse_split_variable(name);
      if (!var) throw ParseError(line, "variable", "unknown variable '" + std::string(name) + "'");
      pred.variables.push_back(*var);
    }
    pred.values = detail::parse_value_set(text.substr(eq + 1), pred.variables.size(), line);
    section->back().predicates.push_back(std::move(pred));
  }
  for (const auto* rules : {&spec.interpolation, &spec.extrapolation})
    for (const auto& r : *rules)
      if (r.predicates.empty()) throw Error("split spec has an empty section");
  return spec;
}

inline SplitSpec parse_split_spec(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_split_spec(in);
}

/// Test-set layout of the original IOzone study.
inline constexpr std::string_view kIozoneSplitSpec = R"(# Interpolation: unseen file/record pairs at 128 threads and 2.5 GHz.
[interpolation]
file_size_kb,record_size_kb = (512,32) (512,128) (512,256) (768,32) (768,128)
threads = 128
frequency_ghz = 2.5

# Extrapolation: high frequency / thread corners at file/record (256,32).
[extrapolation]
file_size_kb,record_size_kb = (256,32)
frequency_ghz,threads = (2.8,256) (2.9,256) (3.0,256) (3.0,64) (3.0,128)
)";

inline SplitSpec iozone_split_spec() { return parse_split_spec(kIozoneSplitSpec); }

inline SplitSpec read_split_spec(const std::string& path) {
  if (path == "iozone") return iozone_split_spec();
  auto in = csv::open_input(path);
  return parse_split_spec(in);
}

struct DatasetSplit {
  std::vector<VariabilityObservation> training;
  std::vector<VariabilityObservation> interpolation_test;
  std::vector<VariabilityObservation> extrapolation_test;
};

/// Partitions observations by the split rules; unmatched points train.
inline DatasetSplit split_dataset(const std::vector<VariabilityObservation>& observations,
                                  const SplitSpec& spec) {
  DatasetSplit split;
  for (const auto& o : observations) {
    const bool interp = spec.is_interpolation(o.config);
    const bool extrap = spec.is_extrapolation(o.config);
    if (interp && extrap)
      throw Error("configuration " + describe(o.config) +
                  " matches both the interpolation and extrapolation rules");
    if (interp)
      split.interpolation_test.push_back(o);
    else if (extrap)
      split.extrapolation_test.push_back(o);
    else
      split.training.push_back(o);
  }
  if (split.training.empty()) throw Error("split leaves an empty training set");
  return split;
}

/// Observations whose variability is strictly positive; zero-variance groups
/// have no relative error and no log.
inline std::vector<VariabilityObservation> positive_variability(const std::vector<VariabilityObservation>& obs) {
  std::vector<VariabilityObservation> out;
  out.reserve(obs.size());
  for (const auto& o : obs)
    if (o.pvm_kb_s > 0.0) out.push_back(o);
  return out;
}

/// Groups observations by variability map, preserving input order within each map.
inline std::map<VariabilityMapKey, std::vector<VariabilityObservation>> group_by_key(
    const std::vector<VariabilityObservation>& observations) {
  std::map<VariabilityMapKey, std::vector<VariabilityObservation>> out;
  for (const auto& o : observations) out[o.key()].push_back(o);
  return out;
}

// ---------------------------------------------------------------------------
// Reference design of the IOzone study

namespace iozone_design {

inline const std::vector<double>& frequencies() {
  static const std::vector<double> v = {1.2, 1.4, 1.5, 1.6, 1.8, 1.9, 2.0, 2.1,
                                        2.3, 2.4, 2.5, 2.7, 2.8, 2.9, 3.0};
  return v;
}

inline const std::vector<std::int64_t>& threads() {
  static const std::vector<std::int64_t> v = {1, 2, 4, 8, 16, 32, 64, 128, 256};
  return v;
}

inline const std::vector<std::pair<std::int64_t, std::int64_t>>& file_record_pairs() {
  static const std::vector<std::pair<std::int64_t, std::int64_t>> v = {
      {64, 32}, {256, 32}, {256, 128}, {1024, 32}, {1024, 128}, {1024, 512}};
  return v;
}

inline const std::vector<std::pair<std::int64_t, std::int64_t>>& interpolation_pairs() {
  static const std::vector<std::pair<std::int64_t, std::int64_t>> v = {
      {512, 32}, {512, 128}, {512, 256}, {768, 32}, {768, 128}};
  return v;
}

/// Full factorial training grid plus the interpolation probes (95355 configurations).
inline std::vector<SystemConfiguration> configurations() {
  std::vector<SystemConfiguration> out;
  for (auto mode : kAllIoModes)
    for (auto io : kAllSchedulers)
      for (auto vm : kAllSchedulers) {
        for (double f : frequencies())
          for (auto t : threads())
            for (auto [file, record] : file_record_pairs())
              out.push_back({mode, io, vm, f, t, file, record});
        for (auto [file, record] : interpolation_pairs())
          out.push_back({mode, io, vm, 2.5, 128, file, record});
      }
  return out;
}

}  // namespace iozone_design

}  // namespace vmap
