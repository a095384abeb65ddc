#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "unimodal/data.hpp"
#include "unimodal/distribution.hpp"

using namespace unimodal;
using namespace unimodal::data;

namespace {

const std::filesystem::path kDataDir = UNIMODAL_DATA_DIR;

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("unimodal_data_test_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

Descriptor toy_descriptor() {
  return parse_descriptor(R"({
    "id": "toy", "file": "toy.csv", "header": true,
    "columns": [
      {"name": "x", "type": "numeric"},
      {"name": "colour", "type": "categorical", "categories": ["red", "blue"]},
      {"name": "note", "type": "ignore"},
      {"name": "grade", "type": "target"}
    ],
    "target": {"kind": "categorical", "order": ["low", "mid", "high"]}
  })");
}

std::vector<int> iota_rows(int n) {
  std::vector<int> r(static_cast<std::size_t>(n));
  std::iota(r.begin(), r.end(), 0);
  return r;
}

}  // namespace

TEST(LoadCsv, ToyFileIsBitExact) {
  TempDir dir;
  const auto path =
      dir.write("toy.csv", "x,colour,note,grade\n0.1,red,a,low\n-2.5e3,blue,b,high\n\n7.125,red,c,mid\n");
  const auto ds = load_csv(path, toy_descriptor());
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.numeric(0, 0), 0.1);
  EXPECT_EQ(ds.numeric(1, 0), -2.5e3);
  EXPECT_EQ(ds.numeric(2, 0), 7.125);
  EXPECT_EQ(ds.categorical[0], (std::vector<std::string>{"red", "blue", "red"}));
  EXPECT_EQ(ds.labels, (std::vector<int>{1, 3, 2}));
  EXPECT_EQ(ds.k, 3);
  EXPECT_EQ(ds.features.size(), 2u);
}

TEST(LoadCsv, ErrorsCarryLineNumbers) {
  TempDir dir;
  const auto desc = toy_descriptor();
  auto expect_error = [&](const std::string& body, const std::string& fragment) {
    const auto path = dir.write("bad.csv", "x,colour,note,grade\n" + body);
    try {
      load_csv(path, desc);
      FAIL() << "no error for: " << body;
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error("1,red,a,low\n2,red,low\n", "bad.csv:3");
  expect_error("1,red,a,low\nabc,red,a,low\n", "bad.csv:3: expected a number");
  expect_error("1,green,a,low\n", "unknown category 'green'");
  expect_error("?,red,a,low\n", "missing value");
  expect_error("1,red,a,top\n", "unknown class 'top'");
  EXPECT_THROW(load_csv(dir.path() / "absent.csv", desc), DataError);
}

TEST(LoadCsv, EmptyClassIsRejected) {
  TempDir dir;
  const auto path = dir.write("toy.csv", "x,colour,note,grade\n1,red,a,low\n2,blue,b,high\n");
  EXPECT_THROW(load_csv(path, toy_descriptor()), DataError);
}

TEST(Descriptors, CardsMatchPublishedSizes) {
  struct Card { const char* id; std::size_t rows; int classes; };
  for (const Card card : {Card{"balance-scale", 625, 3}, Card{"car", 1728, 4},
                          Card{"abalone10", 4177, 10}, Card{"new-thyroid", 215, 3}}) {
    const auto d = read_descriptor(kDataDir / "descriptors" / (std::string(card.id) + ".json"));
    EXPECT_EQ(d.id, card.id);
    EXPECT_EQ(d.expected_rows, card.rows);
    EXPECT_EQ(d.expected_classes, card.classes);
    EXPECT_EQ(d.target_classes, card.classes);
  }
  EXPECT_EQ(available_descriptors(kDataDir).size(), 4u);
  EXPECT_THROW(parse_descriptor("{"), DataError);
  EXPECT_THROW(parse_descriptor(R"({"id":"x","file":"f","columns":[],"target":{"kind":"numeric","classes":3}})"),
               DataError);
}

TEST(Datasets, BalanceScale) {
  const auto ds = load_dataset("balance-scale", kDataDir);
  EXPECT_EQ(ds.size(), 625u);
  EXPECT_EQ(ds.k, 3);
  EXPECT_EQ(ds.class_counts(), (std::vector<std::size_t>{288, 49, 288}));
  EXPECT_EQ(ds.numeric.cols(), 4);
}

TEST(Datasets, OptionalFilesMatchCards) {
  for (const std::string id : {"car", "abalone10", "new-thyroid"}) {
    const auto desc = read_descriptor(kDataDir / "descriptors" / (id + ".json"));
    if (!std::filesystem::exists(kDataDir / desc.file)) {
      std::cout << "dataset file missing: " << desc.file << " (skipping card check)\n";
      continue;
    }
    const auto ds = load_csv(kDataDir / desc.file, desc);
    EXPECT_EQ(ds.size(), desc.expected_rows) << id;
    EXPECT_EQ(ds.k, desc.expected_classes) << id;
    for (auto c : ds.class_counts()) EXPECT_GT(c, 0u) << id;
  }
}

TEST(Discretize, EqualFrequencyDeciles) {
  std::vector<double> raw(100);
  std::iota(raw.begin(), raw.end(), 1.0);
  std::shuffle(raw.begin(), raw.end(), std::mt19937_64(3));
  const auto d = discretize_target(raw, 10);
  std::vector<int> counts(10, 0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    ++counts[static_cast<std::size_t>(d.labels[i] - 1)];
    EXPECT_EQ(d.labels[i], static_cast<int>((raw[i] - 1) / 10) + 1);
  }
  EXPECT_EQ(counts, std::vector<int>(10, 10));
  EXPECT_EQ(d.edges.size(), 11u);
}

TEST(Discretize, EqualWidthIsRightClosed) {
  // 1..29 in 10 bins of width 2.8: (6.6, 9.4] holds 7, 8, 9.
  std::vector<double> raw;
  for (int v = 1; v <= 29; ++v) raw.push_back(v);
  const auto d = discretize_target(raw, 10, BinStrategy::EqualWidth);
  EXPECT_EQ(d.labels[0], 1);
  EXPECT_EQ(d.labels[2], 1);   // 3 <= 3.8
  EXPECT_EQ(d.labels[3], 2);   // 4
  EXPECT_EQ(d.labels[6], 3);   // 7
  EXPECT_EQ(d.labels[8], 3);   // 9
  EXPECT_EQ(d.labels[9], 4);   // 10
  EXPECT_EQ(d.labels[28], 10);
}

TEST(Discretize, Contracts) {
  const std::vector<double> raw{1, 2, 3, 4};
  EXPECT_THROW(discretize_target(raw, 1), DomainError);
  EXPECT_THROW(discretize_target(raw, 5), DomainError);
  const std::vector<double> tied{1, 1, 1, 1, 1, 1, 1, 2, 3};
  EXPECT_THROW(discretize_target(tied, 3), DataError);
  EXPECT_NO_THROW(discretize_target(tied, 3, BinStrategy::EqualWidth));
}

TEST(Features, ZScoreExamplesAndDegenerateColumns) {
  TabularDataset ds;
  ds.features = {{"a", ColumnType::Numeric, {}}, {"b", ColumnType::Numeric, {}}};
  ds.numeric.resize(4, 2);
  ds.numeric << 3, 1, 7, 1, 3, 1, 7, 1;  // column a: mean 5, std 2
  ds.labels = {1, 1, 2, 2};
  ds.k = 2;
  const auto rows = iota_rows(4);
  const auto t = FeatureTransform::fit(ds, rows);
  const auto x = t.apply(ds, rows);
  EXPECT_EQ(x(1, 0), 1.0);
  EXPECT_EQ(x(0, 0), -1.0);
  EXPECT_TRUE(x.col(1).isZero());
}

TEST(Features, TrainingColumnsAreStandardized) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(3.0, 5.0);
  TabularDataset ds;
  ds.features = {{"a", ColumnType::Numeric, {}}, {"b", ColumnType::Numeric, {}},
                 {"c", ColumnType::Categorical, {}}};
  ds.numeric.resize(200, 2);
  for (Eigen::Index i = 0; i < ds.numeric.size(); ++i) ds.numeric.data()[i] = normal(rng);
  ds.categorical = {std::vector<std::string>(200, "u")};
  for (std::size_t i = 0; i < 200; i += 3) ds.categorical[0][i] = "v";
  ds.labels.assign(200, 1);
  ds.k = 1;
  const auto rows = iota_rows(150);
  const auto t = FeatureTransform::fit(ds, rows);
  EXPECT_EQ(t.output_width(), 4);
  const auto x = t.apply(ds, rows);
  for (int c = 0; c < 2; ++c) {
    const double mean = x.col(c).mean();
    const double sd = std::sqrt((x.col(c).array() - mean).square().mean());
    EXPECT_LT(std::abs(mean), 1e-10);
    EXPECT_NEAR(sd, 1.0, 1e-10);
  }
  EXPECT_EQ(x.col(2).sum() + x.col(3).sum(), 150.0);
}

TEST(Features, StatisticsIgnoreNonTrainingRows) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  TabularDataset ds;
  ds.features = {{"a", ColumnType::Numeric, {}}};
  ds.numeric.resize(50, 1);
  for (Eigen::Index i = 0; i < 50; ++i) ds.numeric(i, 0) = normal(rng);
  ds.labels.assign(50, 1);
  const auto train = iota_rows(30);
  const auto before = FeatureTransform::fit(ds, train);
  for (Eigen::Index i = 30; i < 50; ++i) ds.numeric(i, 0) = 1e6;
  const auto after = FeatureTransform::fit(ds, train);
  EXPECT_EQ(before.means(), after.means());
  EXPECT_EQ(before.stds(), after.stds());
}

TEST(Features, UnseenCategoryAtInference) {
  TabularDataset ds;
  ds.features = {{"c", ColumnType::Categorical, {}}};
  ds.numeric.resize(3, 0);
  ds.categorical = {{"a", "b", "z"}};
  ds.labels = {1, 1, 1};
  const std::vector<int> train{0, 1};
  const auto t = FeatureTransform::fit(ds, train);
  const std::vector<int> test{2};
  EXPECT_THROW(t.apply(ds, test), ContractViolation);
}

TEST(Folds, SpecExamples) {
  std::vector<int> balanced(100);
  for (std::size_t i = 0; i < 100; ++i) balanced[i] = i < 50 ? 1 : 2;
  const auto a = stratified_kfold(balanced, 5, 0);
  for (const auto& f : a.folds) {
    EXPECT_EQ(std::count_if(f.begin(), f.end(), [&](int r) { return balanced[r] == 1; }), 10);
    EXPECT_EQ(f.size(), 20u);
  }

  std::vector<int> skewed;
  skewed.insert(skewed.end(), 30, 1);
  skewed.insert(skewed.end(), 15, 2);
  skewed.insert(skewed.end(), 5, 3);
  const auto b = stratified_kfold(skewed, 5, 9);
  for (const auto& f : b.folds) {
    std::vector<int> counts(3, 0);
    for (int r : f) ++counts[static_cast<std::size_t>(skewed[static_cast<std::size_t>(r)] - 1)];
    EXPECT_EQ(counts, (std::vector<int>{6, 3, 1}));
  }
  EXPECT_TRUE(b.warnings.empty());
  EXPECT_EQ(stratified_kfold(skewed, 5, 9).folds, b.folds);
  EXPECT_NE(stratified_kfold(skewed, 5, 10).folds, b.folds);
  EXPECT_EQ(b.validation_fold, 0);
}

TEST(Folds, PartitionAndStratificationProperties) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 10 + static_cast<int>(rng() % 300);
    const int classes = 2 + static_cast<int>(rng() % 6);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int& l : labels) l = 1 + static_cast<int>(rng() % static_cast<unsigned>(classes));
    const auto split = stratified_kfold(labels, 5, trial);
    std::vector<int> all;
    for (const auto& f : split.folds) all.insert(all.end(), f.begin(), f.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, iota_rows(n));
    std::vector<std::size_t> sizes;
    for (const auto& f : split.folds) sizes.push_back(f.size());
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1u);
    for (int c = 1; c <= classes; ++c) {
      const auto total = std::count(labels.begin(), labels.end(), c);
      for (const auto& f : split.folds) {
        const auto in = std::count_if(f.begin(), f.end(), [&](int r) { return labels[static_cast<std::size_t>(r)] == c; });
        EXPECT_LE(std::abs(static_cast<double>(in) - static_cast<double>(total) / 5.0), 1.0);
      }
    }
    const auto comp = split.complement(2);
    EXPECT_EQ(comp.size() + split.folds[2].size(), static_cast<std::size_t>(n));
  }
}

TEST(Folds, RareClassesWarn) {
  const std::vector<int> labels{1, 1, 1, 1, 1, 1, 2, 2};
  const auto split = stratified_kfold(labels, 5, 0);
  EXPECT_EQ(split.warnings.size(), 1u);
}

TEST(Sidecars, WritesEdgesAndFolds) {
  TempDir dir;
  TabularDataset ds;
  ds.id = "toy";
  ds.bin_edges = {1.0, 2.5, 4.0};
  ds.labels = {1, 2, 1, 2, 1, 2};
  ds.k = 2;
  const auto split = stratified_kfold(ds.labels, 2, 0);
  write_sidecars(ds, split, dir.path() / "out");
  std::ifstream bins(dir.path() / "out" / "toy.bins.txt");
  double e = 0;
  std::vector<double> edges;
  while (bins >> e) edges.push_back(e);
  EXPECT_EQ(edges, ds.bin_edges);
  std::ifstream folds(dir.path() / "out" / "toy.folds.txt");
  std::string first;
  std::getline(folds, first);
  EXPECT_EQ(first.rfind("fold 1 validation:", 0), 0u);
}
