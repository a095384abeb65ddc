#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "unimodal/bench.hpp"

using namespace unimodal;
using namespace unimodal::bench;

namespace {

const std::filesystem::path kDataDir = UNIMODAL_DATA_DIR;

const data::TabularDataset& balance() {
  static const auto ds = data::load_dataset("balance-scale", kDataDir);
  return ds;
}

const data::FoldSplit& balance_split() {
  static const auto split = data::stratified_kfold(balance().labels, 5, 0);
  return split;
}

ExperimentConfig quick(const std::string& method, int epochs = 30) {
  auto c = make_config("balance-scale", method);
  c.epochs = epochs;
  c.hidden = 16;
  return c;
}

void expect_same(const MetricsReport& a, const MetricsReport& b) {
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.mae, b.mae);
  EXPECT_EQ(a.unimodality, b.unimodality);
  EXPECT_EQ(a.n, b.n);
}

}  // namespace

TEST(Evaluate, PerfectPredictor) {
  const std::vector<int> truth{1, 3, 2, 2};
  Matrix dist = Matrix::Zero(4, 3);
  for (int i = 0; i < 4; ++i) dist(i, truth[static_cast<std::size_t>(i)] - 1) = 1.0;
  const auto r = evaluate(dist, truth, truth);
  EXPECT_EQ(r.accuracy, 100.0);
  EXPECT_EQ(r.mae, 0.0);
  EXPECT_EQ(r.unimodality, 100.0);
  EXPECT_EQ(r.n, 4u);
}

TEST(Evaluate, HandExample) {
  Matrix dist(4, 3);
  dist << 0.6, 0.1, 0.3,  // bimodal
      0.2, 0.5, 0.3, 0.1, 0.2, 0.7, 1.0 / 3, 1.0 / 3, 1.0 / 3;
  const std::vector<int> predicted{1, 2, 3, 1};
  const std::vector<int> truth{3, 2, 3, 2};
  const auto r = evaluate(dist, predicted, truth);
  EXPECT_DOUBLE_EQ(r.accuracy, 50.0);
  EXPECT_DOUBLE_EQ(r.mae, 0.75);
  EXPECT_DOUBLE_EQ(r.unimodality, 75.0);
  EXPECT_THROW(evaluate(dist, std::vector<int>{1}, truth), ContractViolation);
}

TEST(Evaluate, MajorityLabelTiesGoLow) {
  EXPECT_EQ(majority_label(std::vector<int>{3, 3, 1, 1, 2}, 3), 1);
  EXPECT_EQ(majority_label(std::vector<int>{2, 3, 3}, 3), 3);
}

TEST(Dummy, MatchesTrainingMajorityPrevalence) {
  const auto& ds = balance();
  const auto& split = balance_split();
  const auto c = make_config("balance-scale", kDummy);
  for (int fold = 0; fold < 5; ++fold) {
    const auto train_rows = split.complement(fold);
    std::vector<int> train_labels;
    for (int r : train_rows) train_labels.push_back(ds.labels[static_cast<std::size_t>(r)]);
    const int majority = majority_label(train_labels, ds.k);
    const auto& test = split.folds[static_cast<std::size_t>(fold)];
    double hits = 0, abs_err = 0;
    for (int r : test) {
      hits += ds.labels[static_cast<std::size_t>(r)] == majority;
      abs_err += std::abs(ds.labels[static_cast<std::size_t>(r)] - majority);
    }
    const auto m = run_fold(c, ds, split, fold);
    EXPECT_DOUBLE_EQ(m.accuracy, 100.0 * hits / static_cast<double>(test.size()));
    EXPECT_DOUBLE_EQ(m.mae, abs_err / static_cast<double>(test.size()));
    EXPECT_EQ(m.unimodality, 100.0);
    const double train_prevalence =
        100.0 * static_cast<double>(std::count(train_labels.begin(), train_labels.end(), majority)) /
        static_cast<double>(train_labels.size());
    EXPECT_NEAR(m.accuracy, train_prevalence, 100.0 / static_cast<double>(test.size()) + 1e-9);
  }
}

TEST(Train, SeparableToyReachesFullTrainingAccuracy) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.3);
  Matrix x(40, 2);
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    const int y = i % 2 + 1;
    x(i, 0) = (y == 1 ? -2.0 : 2.0) + noise(rng);
    x(i, 1) = noise(rng);
    labels.push_back(y);
  }
  auto c = make_config("toy", "ce");
  c.epochs = 200;
  const auto trained = train(c, x, labels, 2);
  EXPECT_EQ(evaluate(trained.model, x, labels).accuracy, 100.0);
  EXPECT_LT(trained.loss_history.back(), trained.loss_history.front());
  EXPECT_EQ(trained.loss_history.size(), 200u);
}

TEST(Train, LossDecreasesOnBalanceScale) {
  const auto& ds = balance();
  const auto rows = balance_split().complement(0);
  const auto t = data::FeatureTransform::fit(ds, rows);
  std::vector<int> labels;
  for (int r : rows) labels.push_back(ds.labels[static_cast<std::size_t>(r)]);
  for (const auto& method : ordinal::registered_losses()) {
    const auto trained = train(quick(method, 40), t.apply(ds, rows), labels, ds.k);
    EXPECT_LT(trained.loss_history.back(), trained.loss_history.front()) << method;
  }
}

TEST(Train, WuWithZeroLambdaReproducesCe) {
  auto ce = quick("ce");
  for (const char* wu : {"wu-kldiv", "wu-wass"}) {
    auto c = quick(wu);
    c.spec.lambda = 0.0;
    expect_same(run_fold(c, balance(), balance_split(), 1), run_fold(ce, balance(), balance_split(), 1));
  }
}

TEST(Train, HardUnimodalHeadsAreAlwaysUnimodal) {
  for (const char* method : {"un", "bu", "pu"}) {
    for (int fold = 0; fold < 5; ++fold) {
      EXPECT_EQ(run_fold(quick(method, 10), balance(), balance_split(), fold).unimodality, 100.0)
          << method << " fold " << fold;
    }
  }
}

TEST(Train, DeterministicGivenSeed) {
  for (const char* method : {"ce", "wu-kldiv", "pu"}) {
    auto c = quick(method);
    c.seed = 3;
    expect_same(run_fold(c, balance(), balance_split(), 2), run_fold(c, balance(), balance_split(), 2));
  }
  auto a = quick("ce"), b = quick("ce");
  b.seed = 1;
  const auto ra = run_fold(a, balance(), balance_split(), 2);
  const auto rb = run_fold(b, balance(), balance_split(), 2);
  EXPECT_TRUE(ra.accuracy != rb.accuracy || ra.mae != rb.mae || ra.unimodality != rb.unimodality);
}

TEST(Train, MiniBatchPath) {
  EXPECT_EQ(effective_batch_size(ExperimentConfig{}, 5000), 5000);
  EXPECT_EQ(effective_batch_size(ExperimentConfig{}, 5001), 256);
  auto c = quick("co2", 5);
  c.batch_size = 64;
  const auto a = run_fold(c, balance(), balance_split(), 1);
  expect_same(a, run_fold(c, balance(), balance_split(), 1));
}

TEST(Train, AbortsOnDivergenceAndTimeCap) {
  Matrix x = Matrix::Ones(4, 2);
  x(1, 0) = std::nan("");
  const std::vector<int> labels{1, 2, 1, 2};
  EXPECT_THROW(train(quick("ce"), x, labels, 2), TrainingAborted);
  auto c = quick("ce", 1000);
  c.max_seconds = 0.0;
  try {
    train(c, Matrix::Ones(4, 2), labels, 2);
    FAIL();
  } catch (const TrainingAborted& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(train(make_config("toy", kDummy), Matrix::Ones(4, 2), labels, 2), ContractViolation);
}

TEST(Config, JsonRoundTrip) {
  auto c = make_config("car", "wu-wass");
  c.spec.lambda = 10;
  c.spec.cost_exponent = 2;
  c.seed = 7;
  c.epochs = 12;
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.spec.kind, ordinal::LossKind::WU_Wass);
  EXPECT_EQ(make_config("x", "co").spec.delta, 0.0);
  EXPECT_THROW(config_from_json(nlohmann::json{{"loss", "ce"}, {"lamda", 1}}), ContractViolation);
  EXPECT_THROW(config_from_json(nlohmann::json{{"loss", "nope"}}), std::exception);
  const auto defaults = make_config("car", "ce");
  EXPECT_EQ(defaults.hidden, 128);
  EXPECT_EQ(defaults.epochs, 1000);
  EXPECT_EQ(defaults.lr, 1e-4);
}

TEST(Rank, MeanRanksForTies) {
  EXPECT_EQ(rank(std::vector<double>{3, 1, 2}, true), (std::vector<double>{1, 3, 2}));
  EXPECT_EQ(rank(std::vector<double>{1, 1, 0}, true), (std::vector<double>{1.5, 1.5, 3}));
  EXPECT_EQ(rank(std::vector<double>{0.2, 0.2, 0.2}, false), (std::vector<double>{2, 2, 2}));
  EXPECT_EQ(rank(std::vector<double>{0.5, 0.1}, false), (std::vector<double>{2, 1}));
}

TEST(Rank, PermutationConsistent) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(2 + rng() % 10);
    for (auto& x : v) x = static_cast<double>(rng() % 5);
    std::vector<std::size_t> perm(v.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> permuted;
    for (auto p : perm) permuted.push_back(v[p]);
    const auto r = rank(v, true), rp = rank(permuted, true);
    for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(rp[i], r[perm[i]]);
    EXPECT_DOUBLE_EQ(std::accumulate(r.begin(), r.end(), 0.0),
                     static_cast<double>(v.size() * (v.size() + 1)) / 2.0);
  }
}

TEST(Aggregates, DominatingMethodRanksFirst) {
  BenchTable t;
  t.methods = {"a", "b", "c"};
  t.datasets = {"d1", "d2"};
  const auto row = [](std::string d, std::string m, double acc, double mae) {
    BenchRow r{std::move(d), std::move(m), std::nullopt, {}, {}};
    r.summary.mean = {acc, mae, 100.0, 10};
    return r;
  };
  t.rows = {row("d1", "b", 80, 0.3), row("d1", "a", 90, 0.1), row("d1", "c", 70, 0.5),
            row("d2", "a", 60, 0.2), row("d2", "c", 50, 0.6), row("d2", "b", 55, 0.4)};
  compute_aggregates(t);
  EXPECT_EQ(t.aggregates[0].rank_accuracy, 1.0);
  EXPECT_EQ(t.aggregates[0].rank_mae, 1.0);
  EXPECT_EQ(t.aggregates[1].rank_accuracy, 2.0);
  EXPECT_EQ(t.aggregates[2].rank_accuracy, 3.0);
  EXPECT_EQ(t.aggregates[0].rank_unimodality, 2.0);
  EXPECT_DOUBLE_EQ(t.aggregates[0].mean.accuracy, 75.0);

  t.rows.push_back(BenchRow{"d3", "a", std::nullopt, {}, "dataset file missing"});
  t.datasets.push_back("d3");
  compute_aggregates(t);
  EXPECT_EQ(t.aggregates[0].mean.n, 2u);
}

TEST(Benchmark, SingleDummyRowMatchesEvaluate) {
  BenchOptions options;
  options.data_dir = kDataDir;
  const std::vector<std::string> datasets{"balance-scale", "no-such-dataset"};
  const std::vector<std::string> methods{kDummy};
  const auto table = run_benchmark(datasets, methods, options);
  ASSERT_EQ(table.rows.size(), 2u);
  const std::vector<std::uint64_t> seeds{0};
  const auto direct = cross_validate(make_config("balance-scale", kDummy), balance(), balance_split(), seeds);
  expect_same(table.rows[0].summary.mean, direct.mean);
  EXPECT_EQ(table.rows[0].summary.runs.size(), 4u);
  EXPECT_TRUE(table.rows[0].error.empty());
  EXPECT_FALSE(table.rows[1].error.empty());
  EXPECT_EQ(table.aggregates[0].rank_accuracy, 1.0);

  const auto csv = to_csv(table);
  EXPECT_EQ(csv.rfind("dataset,method,lambda,accuracy", 0), 0u);
  EXPECT_NE(csv.find("balance-scale,dummy,,"), std::string::npos);
  EXPECT_NE(csv.find("average,dummy"), std::string::npos);
  EXPECT_NE(to_text(table).find("error: "), std::string::npos);
}

TEST(Sweep, ZeroLambdaRowEqualsCe) {
  auto c = quick("wu-kldiv", 10);
  const std::vector<double> lambdas{0.0, 1.0};
  const std::vector<std::uint64_t> seeds{0};
  const auto sweep = lambda_sweep(c, balance(), balance_split(), lambdas, seeds);
  ASSERT_EQ(sweep.rows.size(), 2u);
  const auto ce = cross_validate(quick("ce", 10), balance(), balance_split(), seeds);
  for (std::size_t i = 0; i < ce.runs.size(); ++i) expect_same(sweep.rows[0].evaluation.runs[i], ce.runs[i]);
  expect_same(sweep.rows[0].validation, run_fold(quick("ce", 10), balance(), balance_split(), 0));
  const auto csv = sweep_csv(sweep);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_THROW(lambda_sweep(quick("ce"), balance(), balance_split(), lambdas, seeds), ContractViolation);
  EXPECT_EQ(default_lambda_grid().size(), 7u);
}

TEST(Summary, MeanAndSampleStd) {
  const std::vector<MetricsReport> runs{{90, 0.1, 100, 5}, {80, 0.3, 50, 5}};
  const auto s = summarize(runs);
  EXPECT_DOUBLE_EQ(s.mean.accuracy, 85);
  EXPECT_DOUBLE_EQ(s.stddev.accuracy, std::sqrt(50.0));
  EXPECT_DOUBLE_EQ(s.mean.mae, 0.2);
  EXPECT_EQ(summarize(std::vector<MetricsReport>{{90, 0.1, 100, 5}}).stddev.accuracy, 0.0);
}

TEST(RunLog, AppendsRecordsWithContentHash) {
  EXPECT_EQ(content_hash(""), "cbf29ce484222325");
  EXPECT_EQ(content_hash("a"), "af63dc4c8601ec8c");
  const auto path = std::filesystem::temp_directory_path() / "unimodal_runlog_test" / "runs.tsv";
  std::filesystem::remove_all(path.parent_path());
  {
    RunLog log(path);
    log.append(make_config("car", "ce"), "h", {99.0, 0.01, 40.0, 100}, 2);
  }
  RunLog again(path);
  again.append(make_config("car", "un"), "h", {98.0, 0.02, 100.0, 100}, 3);
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0].rfind("hash\t", 0), 0u);
  EXPECT_EQ(lines[1].substr(0, 16), content_hash(to_json(make_config("car", "ce")).dump() + "h"));
  EXPECT_NE(lines[1].substr(0, 16), lines[2].substr(0, 16));
  std::filesystem::remove_all(path.parent_path());
}

TEST(ParallelFor, RunsEveryJobAndPropagatesErrors) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}
