#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "unimodal/data.hpp"
#include "unimodal/model.hpp"
#include "unimodal/ordinal.hpp"

// Experiment orchestration: training, metrics, cross-validation over the
// fold protocol, lambda sweeps and results tables.
namespace unimodal::bench {

using ad::Matrix;

/// Training stopped early: non-finite loss or wall-clock cap.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Method name for the majority-class baseline.
inline constexpr const char* kDummy = "dummy";

struct ExperimentConfig {
  std::string dataset;
  /// Registered loss name or "dummy".
  std::string method = "ce";
  ordinal::LossSpec spec;
  int hidden = 128;
  int epochs = 1000;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  /// 0 picks full batch up to 5000 rows and 256 above.
  int batch_size = 0;
  double max_seconds = 600.0;
  std::uint64_t fold_seed = 0;

  bool is_dummy() const { return method == kDummy; }
};

/// Config with the defaults of `method` (loss spec from the registry).
ExperimentConfig make_config(const std::string& dataset, const std::string& method);

nlohmann::json to_json(const ExperimentConfig& c);
/// Keys match the CLI flags: dataset, loss, lambda, delta, r, alpha, tau,
/// hidden, epochs, lr, seed, batch-size, max-seconds, fold-seed. Unknown keys
/// are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);

int effective_batch_size(const ExperimentConfig& c, std::size_t rows);

struct TrainResult {
  model::Model model;
  std::vector<double> loss_history;  ///< mean loss per epoch
};

/// Adam on the loss of `config.spec`; rows of x are samples, labels 1..k.
TrainResult train(const ExperimentConfig& config, const Matrix& x, std::span<const int> labels,
                  int k);

struct MetricsReport {
  double accuracy = 0.0;     ///< percent
  double mae = 0.0;          ///< class-index units
  double unimodality = 0.0;  ///< percent
  std::size_t n = 0;
};

/// `distributions` is N x K; `predicted` and `truth` are 1-based.
MetricsReport evaluate(const Matrix& distributions, std::span<const int> predicted,
                       std::span<const int> truth);
MetricsReport evaluate(const model::Model& m, const Matrix& x, std::span<const int> truth);

/// Most frequent training label, lowest index on ties.
int majority_label(std::span<const int> train_labels, int k);

/// Trains on every fold except `fold` and evaluates on `fold` (0-based).
/// Features are fitted on the training rows only.
MetricsReport run_fold(const ExperimentConfig& config, const data::TabularDataset& ds,
                       const data::FoldSplit& split, int fold);

struct Summary {
  MetricsReport mean;
  MetricsReport stddev;  ///< sample std over runs (n = number of runs)
  std::vector<MetricsReport> runs;
};

Summary summarize(std::span<const MetricsReport> runs);

/// Evaluation folds 2..k (0-based 1..k-1) for every seed in `seeds`, runs
/// spread over `threads` workers. The run list is ordered seed-major.
Summary cross_validate(const ExperimentConfig& config, const data::TabularDataset& ds,
                       const data::FoldSplit& split, std::span<const std::uint64_t> seeds,
                       int threads = 0);

/// 1e-3, 1e-2, ..., 1e3.
std::vector<double> default_lambda_grid();

struct SweepRow {
  double lambda = 0.0;
  MetricsReport validation;  ///< fold 1, mean over seeds
  Summary evaluation;        ///< folds 2..k
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Row with the best validation accuracy (lower MAE, then smaller lambda on
  /// ties).
  std::size_t selected = 0;
};

SweepResult lambda_sweep(const ExperimentConfig& config, const data::TabularDataset& ds,
                         const data::FoldSplit& split, std::span<const double> lambdas,
                         std::span<const std::uint64_t> seeds, int threads = 0);

struct LambdaSelection {
  std::vector<double> lambdas;
  std::vector<MetricsReport> validation;  ///< fold 1, mean over seeds
  std::size_t selected = 0;
  double lambda() const { return lambdas[selected]; }
};

/// Trains on folds 2..k and scores fold 1 for every lambda; picks the best
/// validation accuracy, then lower MAE, then the earlier grid entry.
LambdaSelection select_lambda(const ExperimentConfig& config, const data::TabularDataset& ds,
                              const data::FoldSplit& split, std::span<const double> lambdas,
                              std::span<const std::uint64_t> seeds, int threads = 0);

/// Mean ranks (1 = best, ties share the average of their positions).
std::vector<double> rank(std::span<const double> values, bool higher_is_better);

struct BenchRow {
  std::string dataset;
  std::string method;
  std::optional<double> lambda;
  Summary summary;
  std::string error;  ///< nonempty when the run failed
};

struct BenchTable {
  std::vector<BenchRow> rows;
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  /// Per method: mean over datasets of mean metrics, and mean rank per metric.
  struct Aggregate {
    MetricsReport mean;
    double rank_accuracy = 0.0;
    double rank_mae = 0.0;
    double rank_unimodality = 0.0;
  };
  std::vector<Aggregate> aggregates;
};

/// Fills aggregates from rows. Datasets where any method failed are left out
/// of ranks and averages.
void compute_aggregates(BenchTable& table);

std::string to_csv(const BenchTable& table);
std::string to_text(const BenchTable& table);
std::string sweep_csv(const SweepResult& sweep);

struct BenchOptions {
  std::filesystem::path data_dir = "data";
  std::vector<std::uint64_t> seeds{0};
  int threads = 0;
  int epochs = 1000;
  std::vector<double> lambdas = default_lambda_grid();
};

/// Every method on every dataset. Penalty losses get lambda chosen on fold 1;
/// a dataset that fails to load becomes error rows and the run continues.
BenchTable run_benchmark(std::span<const std::string> datasets,
                         std::span<const std::string> methods, const BenchOptions& options);

/// 64-bit FNV-1a, hex encoded.
std::string content_hash(std::string_view bytes);

/// Append-only tab-separated run log with serialized writes. Each record
/// holds the config JSON, the metrics and a hash of config plus data file.
class RunLog {
 public:
  explicit RunLog(std::filesystem::path path);
  void append(const ExperimentConfig& config, const std::string& data_hash,
              const MetricsReport& metrics, int fold);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

/// Runs `jobs` tasks on up to `threads` workers (0 = hardware concurrency).
/// The first exception is rethrown after all workers stop.
void parallel_for(std::size_t jobs, int threads, const std::function<void(std::size_t)>& task);

}  // namespace unimodal::bench
