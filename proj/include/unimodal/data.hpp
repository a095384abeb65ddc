#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Tabular dataset ingestion: descriptor-driven CSV parsing, target
// discretization, train-only feature normalization and stratified folds.
namespace unimodal::data {

/// Malformed input file or descriptor; messages carry file and line.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ColumnType { Numeric, Categorical, Target, Ignore };
enum class BinStrategy { EqualFrequency, EqualWidth };

BinStrategy parse_strategy(const std::string& name);
std::string to_string(BinStrategy s);

struct ColumnSpec {
  std::string name;
  ColumnType type = ColumnType::Numeric;
  /// Fixed category list for categorical columns; empty means learn from
  /// the training rows.
  std::vector<std::string> categories;
};

struct Descriptor {
  std::string id;
  std::string file;
  std::string source;
  std::string sha256;
  char delimiter = ',';
  bool header = false;
  std::vector<ColumnSpec> columns;
  /// Categorical target: ordered class names. Numeric target: empty.
  std::vector<std::string> target_order;
  int target_classes = 0;
  BinStrategy strategy = BinStrategy::EqualFrequency;
  std::size_t expected_rows = 0;
  int expected_classes = 0;
};

Descriptor parse_descriptor(const std::string& json_text);
Descriptor read_descriptor(const std::filesystem::path& path);

/// Loaded rows. Feature columns stay raw (numbers, category strings) until a
/// FeatureTransform fitted on training rows turns them into a matrix.
struct TabularDataset {
  std::string id;
  std::string provenance;
  std::vector<ColumnSpec> features;  ///< feature columns in file order
  /// N x (number of numeric columns), in the order they appear in `features`.
  Eigen::MatrixXd numeric;
  /// One entry per categorical column (same order), N strings each.
  std::vector<std::vector<std::string>> categorical;
  std::vector<int> labels;  ///< 1..k
  int k = 0;
  std::vector<double> bin_edges;  ///< k + 1 edges for discretized targets

  std::size_t size() const { return labels.size(); }
  std::vector<std::size_t> class_counts() const;
};

/// Parses `path` according to `desc`. Throws DataError on malformed rows,
/// unknown categories or missing values ("?"), with the line number.
TabularDataset load_csv(const std::filesystem::path& path, const Descriptor& desc);

/// Reads `<data_dir>/descriptors/<id>.json` and the file it names.
TabularDataset load_dataset(const std::string& id, const std::filesystem::path& data_dir);
std::vector<std::string> available_descriptors(const std::filesystem::path& data_dir);

struct Discretized {
  std::vector<int> labels;
  std::vector<double> edges;
};

/// Right-closed bins (the lowest edge is included). Equal-frequency edges are
/// linear-interpolated quantiles; equal-width edges split [min, max] evenly.
/// Throws DomainError for k < 2 or fewer than k distinct values, DataError if
/// equal-frequency edges collide.
Discretized discretize_target(std::span<const double> raw, int k,
                              BinStrategy strategy = BinStrategy::EqualFrequency);

/// z-scoring (population std, floor 1e-8) of numeric columns and one-hot
/// encoding of categorical ones, with statistics from training rows only.
class FeatureTransform {
 public:
  static FeatureTransform fit(const TabularDataset& data, std::span<const int> train_rows);

  /// Throws ContractViolation on a category the transform has not seen.
  Eigen::MatrixXd apply(const TabularDataset& data, std::span<const int> rows) const;

  int output_width() const { return width_; }
  const Eigen::VectorXd& means() const { return mean_; }
  const Eigen::VectorXd& stds() const { return std_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd std_;
  std::vector<std::vector<std::string>> categories_;
  int width_ = 0;
};

inline constexpr double kStdFloor = 1e-8;

struct FoldSplit {
  int k_folds = 5;
  std::vector<std::vector<int>> folds;  ///< sorted row indices
  int validation_fold = 0;
  std::vector<std::string> warnings;

  /// Every row outside `fold`.
  std::vector<int> complement(int fold) const;
};

/// Shuffles each class with a seeded generator and deals its members round
/// robin, starting each class where the previous one stopped so fold sizes
/// stay within one of each other.
FoldSplit stratified_kfold(std::span<const int> labels, int k = 5, std::uint64_t seed = 0);

/// Writes `<id>.bins.txt` (when the target was discretized) and
/// `<id>.folds.txt` under `dir` for audit.
void write_sidecars(const TabularDataset& data, const FoldSplit& split,
                    const std::filesystem::path& dir);

}  // namespace unimodal::data
