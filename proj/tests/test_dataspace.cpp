#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "vmap/dataspace.hpp"

using namespace vmap;

namespace {

constexpr const char* kRunsHeader =
    "io_mode,io_scheduler,vm_io_scheduler,frequency_ghz,threads,file_size_kb,record_size_kb,throughput_kb_s\n";

std::vector<RunRecord> ingest(const std::string& body) {
  std::istringstream in(kRunsHeader + body);
  return ingest_runs(in);
}

RunRecord run(SystemConfiguration c, double tp) { return {c, tp}; }

SystemConfiguration config(double f = 2.0, std::int64_t t = 4, std::int64_t file = 64, std::int64_t rec = 32) {
  return {IoMode::Fread, Scheduler::CFQ, Scheduler::NOOP, f, t, file, rec};
}

}  // namespace

TEST(Types, KeyIndexIsABijectionOverAllMaps) {
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < kMapCount; ++i) {
    const auto k = VariabilityMapKey::from_index(i);
    EXPECT_EQ(k.index(), i);
    seen.insert(k.index());
  }
  EXPECT_EQ(seen.size(), 117u);
}

TEST(Types, NamesRoundTrip) {
  for (auto m : kAllIoModes) EXPECT_EQ(parse_io_mode(to_string(m)), m);
  for (auto s : kAllSchedulers) EXPECT_EQ(parse_scheduler(to_string(s)), s);
  EXPECT_EQ(parse_io_mode("re-read"), IoMode::Reread);
  EXPECT_FALSE(parse_scheduler("BFQ").has_value());
}

TEST(Ingest, ParsesValidRows) {
  const auto runs = ingest(
      "Fread,CFQ,NOOP,2.0,4,64,32,100.5\n"
      "Fread,CFQ,NOOP,2.0,4,64,32,101.5\n"
      "Fwrite,DEAD,CFQ,1.2,1,1024,512,7\n");
  ASSERT_EQ(runs.size(), 3u);
  EXPECT_EQ(runs[2].config.io_mode, IoMode::Fwrite);
  EXPECT_EQ(runs[2].config.record_size_kb, 512);
  EXPECT_DOUBLE_EQ(runs[0].throughput_kb_s, 100.5);
}

TEST(Ingest, RejectsNonMultipleFileSize) {
  try {
    ingest("Fread,CFQ,NOOP,2.0,4,64,48,100\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("multiple"), std::string::npos);
  }
}

TEST(Ingest, RejectsNonpositiveThroughput) {
  EXPECT_THROW(ingest("Fread,CFQ,NOOP,2.0,4,64,32,-1\n"), ParseError);
  EXPECT_THROW(ingest("Fread,CFQ,NOOP,2.0,4,64,32,0\n"), ParseError);
}

TEST(Ingest, ReportsLineAndFieldOfMalformedValue) {
  try {
    ingest("Fread,CFQ,NOOP,2.0,4,64,32,5\nFread,CFQ,NOOP,fast,4,64,32,5\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.field(), "frequency_ghz");
  }
  EXPECT_THROW(ingest("Fread,CFQ,XYZ,2.0,4,64,32,5\n"), ParseError);
  EXPECT_THROW(ingest("Fread,CFQ,NOOP,2.0,4,64\n"), ParseError);
}

TEST(Ingest, RequiresHeader) {
  std::istringstream in("Fread,CFQ,NOOP,2.0,4,64,32,5\n");
  EXPECT_THROW(ingest_runs(in), ParseError);
}

TEST(ComputePvm, ConstantRunsHaveZeroVariability) {
  const auto obs = compute_pvm({run(config(), 5.0), run(config(), 5.0), run(config(), 5.0)});
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].pvm_kb_s, 0.0);
  EXPECT_EQ(obs[0].mean_throughput_kb_s, 5.0);
  EXPECT_EQ(obs[0].n_runs, 3);
}

TEST(ComputePvm, SampleStandardDeviation) {
  const auto obs = compute_pvm({run(config(), 1.0), run(config(), 2.0), run(config(), 3.0)});
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_DOUBLE_EQ(obs[0].pvm_kb_s, 1.0);
  EXPECT_DOUBLE_EQ(obs[0].mean_throughput_kb_s, 2.0);
}

TEST(ComputePvm, SingleRunGroupIsRejected) {
  try {
    compute_pvm({run(config(), 1.0), run(config(), 2.0), run(config(2.5), 3.0)});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("freq=2.5"), std::string::npos);
  }
}

TEST(ComputePvm, OneObservationPerGroup) {
  std::vector<RunRecord> runs;
  for (int g = 0; g < 3; ++g)
    for (int r = 0; r < 4; ++r) runs.push_back(run(config(1.2 + g), 10.0 + r * (g + 1)));
  const auto obs = compute_pvm(runs);
  ASSERT_EQ(obs.size(), 3u);
  for (const auto& o : obs) EXPECT_EQ(o.n_runs, 4);
}

TEST(ComputePvm, PermutationInvariantBitForBit) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(1e4, 1e7);
  std::vector<RunRecord> runs;
  for (int g = 0; g < 5; ++g)
    for (int r = 0; r < 40; ++r) runs.push_back(run(config(1.2 + 0.1 * g), u(rng)));
  const auto base = compute_pvm(runs);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(runs.begin(), runs.end(), rng);
    const auto again = compute_pvm(runs);
    ASSERT_EQ(again.size(), base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      EXPECT_EQ(again[i].pvm_kb_s, base[i].pvm_kb_s);
      EXPECT_EQ(again[i].mean_throughput_kb_s, base[i].mean_throughput_kb_s);
    }
  }
}

TEST(ComputePvm, ZeroIffAllEqualAndScalesWithThroughput) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(1.0, 100.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RunRecord> runs, scaled;
    const double lambda = 0.5 + trial;
    const int n = 2 + trial % 6;
    for (int r = 0; r < n; ++r) {
      const double v = u(rng);
      runs.push_back(run(config(), v));
      scaled.push_back(run(config(), lambda * v));
    }
    const auto a = compute_pvm(runs)[0];
    const auto b = compute_pvm(scaled)[0];
    EXPECT_GT(a.pvm_kb_s, 0.0);
    EXPECT_NEAR(b.pvm_kb_s, lambda * a.pvm_kb_s, 1e-12 * lambda * a.pvm_kb_s);
    EXPECT_NEAR(b.mean_throughput_kb_s, lambda * a.mean_throughput_kb_s, 1e-12 * lambda * a.mean_throughput_kb_s);
  }
}

TEST(Encode, NaturalLogOfSizesAndThreads) {
  const auto p = encode_point(config(2.4, 32, 1024, 512));
  EXPECT_DOUBLE_EQ(p[0], std::log(1024.0));
  EXPECT_DOUBLE_EQ(p[1], std::log(512.0));
  EXPECT_DOUBLE_EQ(p[2], std::log(32.0));
  EXPECT_DOUBLE_EQ(p[3], 2.4);
  const auto one = encode_point(config(1.2, 1, 1, 1));
  EXPECT_EQ(one, (ContinuousPoint{{0.0, 0.0, 0.0, 1.2}}));
}

TEST(Encode, StrictlyMonotoneAndInjectiveOnGrid) {
  std::set<std::array<double, 4>> seen;
  std::size_t count = 0;
  for (double f : iozone_design::frequencies())
    for (auto t : iozone_design::threads())
      for (auto [file, rec] : iozone_design::file_record_pairs()) {
        seen.insert(encode_point(config(f, t, file, rec)).coords);
        ++count;
      }
  EXPECT_EQ(seen.size(), count);
  EXPECT_LT(encode_point(config(2.0, 4, 64, 32))[0], encode_point(config(2.0, 4, 128, 32))[0]);
  EXPECT_LT(encode_point(config(2.0, 4, 64, 16))[1], encode_point(config(2.0, 4, 64, 32))[1]);
  EXPECT_LT(encode_point(config(2.0, 4, 64, 32))[2], encode_point(config(2.0, 5, 64, 32))[2]);
  EXPECT_LT(encode_point(config(2.0, 4, 64, 32))[3], encode_point(config(2.1, 4, 64, 32))[3]);
}

TEST(Transform, LogAndRaw) {
  EXPECT_EQ(transform_response(1.0, ResponseScale::Log), 0.0);
  for (double y : {0.5, 3.7}) {
    EXPECT_DOUBLE_EQ(inverse_transform_response(transform_response(y, ResponseScale::Log), ResponseScale::Log), y);
    EXPECT_EQ(inverse_transform_response(transform_response(y, ResponseScale::Raw), ResponseScale::Raw), y);
  }
  EXPECT_THROW(transform_response(0.0, ResponseScale::Log), Error);
  EXPECT_EQ(transform_response(0.0, ResponseScale::Raw), 0.0);
}

TEST(ObservationsCsv, RoundTripsThroughText) {
  const auto obs = compute_pvm({run(config(), 1.25), run(config(), 2.5), run(config(3.0, 8, 1024, 128), 7.0),
                                run(config(3.0, 8, 1024, 128), 9.0)});
  std::stringstream s;
  write_observations_csv(s, obs);
  const auto back = read_observations(s);
  ASSERT_EQ(back.size(), obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    EXPECT_EQ(back[i].config, obs[i].config);
    EXPECT_EQ(back[i].point, obs[i].point);
    EXPECT_NEAR(back[i].pvm_kb_s, obs[i].pvm_kb_s, 1e-11 * obs[i].pvm_kb_s);
    EXPECT_EQ(back[i].n_runs, obs[i].n_runs);
  }
}

// ---------------------------------------------------------------------------
// Splits

namespace {

std::vector<VariabilityObservation> iozone_grid_observations() {
  std::vector<VariabilityObservation> out;
  for (const auto& c : iozone_design::configurations()) {
    VariabilityObservation o;
    o.config = c;
    o.point = encode_point(c);
    o.pvm_kb_s = 1.0;
    o.mean_throughput_kb_s = 1.0;
    o.n_runs = 40;
    out.push_back(o);
  }
  return out;
}

}  // namespace

TEST(Split, IozoneGridCounts) {
  const auto obs = iozone_grid_observations();
  EXPECT_EQ(obs.size(), 95355u);
  const auto split = split_dataset(obs, read_split_spec("iozone"));
  EXPECT_EQ(split.training.size(), 94185u);
  EXPECT_EQ(split.interpolation_test.size(), 585u);
  EXPECT_EQ(split.extrapolation_test.size(), 585u);
}

TEST(Split, IozoneRuleMembership) {
  const auto spec = iozone_split_spec();
  SystemConfiguration extrap{IoMode::Pread, Scheduler::DEAD, Scheduler::CFQ, 3.0, 256, 256, 32};
  EXPECT_TRUE(spec.is_extrapolation(extrap));
  EXPECT_FALSE(spec.is_interpolation(extrap));
  SystemConfiguration interp{IoMode::Read, Scheduler::NOOP, Scheduler::NOOP, 2.5, 128, 768, 128};
  EXPECT_TRUE(spec.is_interpolation(interp));
  SystemConfiguration train{IoMode::Fread, Scheduler::CFQ, Scheduler::CFQ, 1.2, 1, 64, 32};
  EXPECT_FALSE(spec.is_interpolation(train));
  EXPECT_FALSE(spec.is_extrapolation(train));
  // Right pair, wrong thread count.
  SystemConfiguration near{IoMode::Fread, Scheduler::CFQ, Scheduler::CFQ, 3.0, 32, 256, 32};
  EXPECT_FALSE(spec.is_extrapolation(near));
}

TEST(Split, PartitionIsDisjointAndComplete) {
  const auto obs = iozone_grid_observations();
  const auto split = split_dataset(obs, iozone_split_spec());
  std::set<std::pair<std::size_t, std::array<double, 4>>> all;
  for (const auto* part : {&split.training, &split.interpolation_test, &split.extrapolation_test})
    for (const auto& o : *part) all.insert({o.key().index(), o.point.coords});
  EXPECT_EQ(all.size(), obs.size());
}

TEST(Split, ParsesCustomSpecWithOrAcrossSections) {
  const auto spec = parse_split_spec(R"(
# two interpolation rules
[interpolation]
threads = 16
[interpolation]
frequency_ghz = 1.2 1.6
io_mode = Fread
[extrapolation]
file_size_kb,record_size_kb = (1024, 512)
)");
  EXPECT_TRUE(spec.is_interpolation(config(2.0, 16)));
  EXPECT_TRUE(spec.is_interpolation(config(1.6, 4)));
  EXPECT_FALSE(spec.is_interpolation(config(2.0, 4)));
  EXPECT_TRUE(spec.is_extrapolation(config(2.0, 4, 1024, 512)));
}

TEST(Split, RejectsBadSpecs) {
  EXPECT_THROW(parse_split_spec("threads = 4\n"), ParseError);
  EXPECT_THROW(parse_split_spec("[training]\nthreads = 4\n"), ParseError);
  EXPECT_THROW(parse_split_spec("[interpolation]\ncolour = red\n"), ParseError);
  EXPECT_THROW(parse_split_spec("[interpolation]\nfile_size_kb,record_size_kb = (1024\n"), ParseError);
}

TEST(Split, OverlappingRulesAndEmptyTrainingAreErrors) {
  std::vector<VariabilityObservation> obs;
  for (auto t : {1, 4, 16}) {
    VariabilityObservation o;
    o.config = config(2.0, t);
    o.point = encode_point(o.config);
    obs.push_back(o);
  }
  EXPECT_THROW(split_dataset(obs, parse_split_spec("[interpolation]\nthreads = 4\n[extrapolation]\nthreads = 4\n")),
               Error);
  EXPECT_THROW(split_dataset(obs, parse_split_spec("[interpolation]\nfrequency_ghz = 2.0\n")), Error);
}
