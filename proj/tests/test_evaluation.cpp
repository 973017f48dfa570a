#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "vmap/evaluation.hpp"
#include "vmap/synthetic.hpp"

using namespace vmap;

namespace {

/// Loop oracle for the pooled metrics.
struct Oracle {
  double er1 = 0, rmse = 0, er2 = 0, mae = 0, er3 = 0;
};

Oracle oracle(const std::vector<double>& y, const std::vector<double>& p) {
  Oracle o;
  double mean = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    o.er1 += std::abs(p[i] / y[i] - 1);
    o.rmse += (p[i] - y[i]) * (p[i] - y[i]);
    o.mae += std::abs(p[i] - y[i]);
    mean += y[i];
  }
  const double n = static_cast<double>(y.size());
  mean /= n;
  o.er1 /= n;
  o.rmse = std::sqrt(o.rmse / n);
  o.mae /= n;
  o.er2 = o.rmse / mean;
  o.er3 = o.mae / mean;
  return o;
}

}  // namespace

TEST(Metrics, WorkedExample) {
  const std::vector<double> y = {1, 2}, p = {2, 4};
  const auto r = compute_metrics(y, p);
  EXPECT_DOUBLE_EQ(r.er1, 1.0);
  EXPECT_DOUBLE_EQ(r.rmse, std::sqrt(2.5));
  EXPECT_DOUBLE_EQ(r.er2, std::sqrt(2.5) / 1.5);
  EXPECT_DOUBLE_EQ(r.mae, 1.5);
  EXPECT_DOUBLE_EQ(r.er3, 1.0);
  EXPECT_EQ(r.ratios, (std::vector<double>{2, 2}));
}

TEST(Metrics, PerfectPredictionIsZero) {
  const std::vector<double> y = {3, 5, 7};
  const auto r = compute_metrics(y, y);
  EXPECT_EQ(r.er1, 0);
  EXPECT_EQ(r.rmse, 0);
  EXPECT_EQ(r.er2, 0);
  EXPECT_EQ(r.mae, 0);
  EXPECT_EQ(r.er3, 0);
}

TEST(Metrics, PropertiesOnRandomData) {
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<double> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = u(rng);
      p[i] = u(rng);
    }
    const auto r = compute_metrics(y, p);
    const auto o = oracle(y, p);
    EXPECT_NEAR(r.er1, o.er1, 1e-12 * std::max(1.0, o.er1));
    EXPECT_NEAR(r.rmse, o.rmse, 1e-12 * o.rmse);
    EXPECT_NEAR(r.mae, o.mae, 1e-12 * o.mae);
    EXPECT_NEAR(r.er2, o.er2, 1e-12 * o.er2);
    EXPECT_NEAR(r.er3, o.er3, 1e-12 * o.er3);
    EXPECT_GE(r.rmse, r.mae * (1 - 1e-12));
    for (double v : {r.er1, r.rmse, r.er2, r.mae, r.er3}) EXPECT_GE(v, 0.0);

    // Joint scaling leaves the relative errors unchanged.
    std::vector<double> ys(y), ps(p);
    for (auto& v : ys) v *= 10;
    for (auto& v : ps) v *= 10;
    const auto s = compute_metrics(ys, ps);
    EXPECT_NEAR(s.er1, r.er1, 1e-12 * std::max(1.0, r.er1));
    EXPECT_NEAR(s.er2, r.er2, 1e-12 * r.er2);
    EXPECT_NEAR(s.er3, r.er3, 1e-12 * r.er3);
    EXPECT_NEAR(s.rmse, 10 * r.rmse, 1e-11 * r.rmse);

    // Joint permutation leaves every metric unchanged.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> yp(n), pp(n);
    for (std::size_t i = 0; i < n; ++i) {
      yp[i] = y[idx[i]];
      pp[i] = p[idx[i]];
    }
    const auto q = compute_metrics(yp, pp);
    EXPECT_NEAR(q.rmse, r.rmse, 1e-12 * r.rmse);
    EXPECT_NEAR(q.er1, r.er1, 1e-12 * std::max(1.0, r.er1));
  }
}

TEST(Metrics, InputErrors) {
  const std::vector<double> a = {1, 2}, b = {1};
  EXPECT_THROW(compute_metrics(a, b), Error);
  const std::vector<double> bad = {1, 0};
  EXPECT_THROW(compute_metrics(bad, a), Error);
  EXPECT_THROW(compute_metrics(std::vector<double>{}, std::vector<double>{}), Error);
}

namespace {

DatasetSplit synthetic_split() { return split_dataset(synthetic::observations(), synthetic::split_spec()); }

}  // namespace

TEST(Benchmark, MatchesPerMapLinearOracle) {
  const auto split = synthetic_split();
  const auto reports = run_benchmark({ModelSpec::of(ModelKind::LM)}, split, BenchmarkMode::Interpolation);
  ASSERT_EQ(reports.size(), 1u);

  std::vector<double> truth, pred;
  for (const auto& t : split.interpolation_test) {
    std::vector<const VariabilityObservation*> train;
    for (const auto& o : split.training)
      if (o.key() == t.key()) train.push_back(&o);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(train.size()), 4);
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (int j = 0; j < 4; ++j) x(i, j) = train[static_cast<std::size_t>(i)]->point[static_cast<std::size_t>(j)];
      y[i] = std::log(train[static_cast<std::size_t>(i)]->pvm_kb_s);
    }
    Eigen::VectorXd q(4);
    for (int j = 0; j < 4; ++j) q[j] = t.point[static_cast<std::size_t>(j)];
    truth.push_back(t.pvm_kb_s);
    pred.push_back(std::exp(fit_linear(x, y).predict(q)));
  }
  const auto o = oracle(truth, pred);
  EXPECT_EQ(reports[0].n, truth.size());
  EXPECT_NEAR(reports[0].er2, o.er2, 1e-9 * o.er2);
  EXPECT_NEAR(reports[0].er1, o.er1, 1e-9 * o.er1);
  EXPECT_EQ(reports[0].method, "LM");
  EXPECT_EQ(reports[0].mode, "interpolation");
}

TEST(Benchmark, ExactModelGivesZeroError) {
  // Variability linear in the encoded coordinates: LM on the raw scale is exact.
  auto obs = synthetic::observations();
  for (auto& o : obs) o.pvm_kb_s = 10 + o.point[0] + 2 * o.point[2] + 0.5 * o.point[3];
  const auto split = split_dataset(obs, synthetic::split_spec());
  const auto reports = run_benchmark({ModelSpec::of(ModelKind::LM)}, split, BenchmarkMode::Extrapolation);
  EXPECT_LT(reports[0].er1, 1e-10);
  EXPECT_LT(reports[0].er2, 1e-10);
  for (double r : reports[0].ratios) EXPECT_NEAR(r, 1.0, 1e-10);
}

TEST(Benchmark, DeterministicAcrossJobCounts) {
  const auto split = synthetic_split();
  const std::vector<ModelSpec> methods = {ModelSpec::of(ModelKind::LM), ModelSpec::of(ModelKind::LSP),
                                          ModelSpec::of(ModelKind::MARS)};
  const auto a = run_benchmark(methods, split, BenchmarkMode::Interpolation, 1);
  const auto b = run_benchmark(methods, split, BenchmarkMode::Interpolation, 3);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t m = 0; m < 3; ++m) {
    EXPECT_EQ(a[m].er2, b[m].er2);
    EXPECT_EQ(a[m].ratios, b[m].ratios);
  }
}

TEST(Benchmark, FitFailuresNameTheMap) {
  auto split = synthetic_split();
  // Leave one map with too little training data for LSP.
  const VariabilityMapKey key = split.interpolation_test.front().key();
  std::vector<VariabilityObservation> kept;
  int seen = 0;
  for (const auto& o : split.training)
    if (o.key() != key || seen++ < 3) kept.push_back(o);
  split.training = kept;
  try {
    run_benchmark({ModelSpec::of(ModelKind::LSP)}, split, BenchmarkMode::Interpolation);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(to_string(key)), std::string::npos) << e.what();
  }
}

TEST(Benchmark, NonpositiveVariabilityIsDropped) {
  auto split = synthetic_split();
  const auto before = run_benchmark({ModelSpec::of(ModelKind::LM)}, split, BenchmarkMode::Interpolation);
  split.interpolation_test.front().pvm_kb_s = 0.0;
  const auto after = run_benchmark({ModelSpec::of(ModelKind::LM)}, split, BenchmarkMode::Interpolation);
  EXPECT_EQ(after[0].n + 1, before[0].n);
}

TEST(Reports, CsvRoundTrip) {
  const auto split = synthetic_split();
  const auto reports = run_benchmark({ModelSpec::of(ModelKind::LM), ModelSpec::of(ModelKind::MARS)}, split,
                                     BenchmarkMode::Extrapolation);
  std::stringstream table;
  write_reports(table, reports);
  const auto back = read_reports(table);
  ASSERT_EQ(back.size(), reports.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].method, reports[i].method);
    EXPECT_EQ(back[i].mode, "extrapolation");
    EXPECT_EQ(back[i].n, reports[i].n);
    EXPECT_NEAR(back[i].er1, reports[i].er1, 1e-11 * reports[i].er1);
    EXPECT_NEAR(back[i].er2, reports[i].er2, 1e-11 * reports[i].er2);
    EXPECT_NEAR(back[i].rmse, reports[i].rmse, 1e-11 * reports[i].rmse);
  }

  std::stringstream ratios;
  write_ratio_distribution(ratios, reports);
  std::string line;
  std::getline(ratios, line);
  EXPECT_EQ(line, kRatioHeader);
  std::size_t rows = 0;
  while (std::getline(ratios, line)) ++rows;
  EXPECT_EQ(rows, reports[0].n + reports[1].n);
}

TEST(Reports, HeaderOnlyAndMalformedTables) {
  std::stringstream empty;
  write_reports(empty, {});
  EXPECT_TRUE(read_reports(empty).empty());
  std::stringstream bad(std::string(kReportHeader) + "\nLM,interpolation,3,x,1,1,1,1\n");
  EXPECT_THROW(read_reports(bad), ParseError);
}
