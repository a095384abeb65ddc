#include "unimodal/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "unimodal/simplex.hpp"

namespace unimodal::bench {

namespace {

Matrix take_rows(const Matrix& x, std::span<const int> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

std::vector<int> take(std::span<const int> v, std::span<const int> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (int r : rows) out.push_back(v[static_cast<std::size_t>(r)]);
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string lambda_text(double l) {
  std::ostringstream os;
  os << l;
  return os.str();
}

MetricsReport mean_of(std::span<const MetricsReport> runs) { return summarize(runs).mean; }

// Activations of a few hundred KB would otherwise be mmapped and unmapped on
// every op, which costs more than the arithmetic.
void keep_large_blocks_on_heap() {
#ifdef __GLIBC__
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 16 << 20);
    mallopt(M_TRIM_THRESHOLD, 64 << 20);
  });
#endif
}

std::size_t pick_best(std::span<const MetricsReport> val) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < val.size(); ++i) {
    if (val[i].accuracy > val[best].accuracy ||
        (val[i].accuracy == val[best].accuracy && val[i].mae < val[best].mae)) {
      best = i;
    }
  }
  return best;
}

}  // namespace

ExperimentConfig make_config(const std::string& dataset, const std::string& method) {
  ExperimentConfig c;
  c.dataset = dataset;
  c.method = method;
  c.spec = ordinal::default_spec(method == kDummy ? ordinal::LossKind::CE
                                                  : ordinal::parse_loss(method));
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["dataset"] = c.dataset;
  j["loss"] = c.method;
  j["lambda"] = c.spec.lambda;
  j["delta"] = c.spec.delta;
  j["r"] = c.spec.cost_exponent;
  j["alpha"] = c.spec.cdw_alpha;
  j["tau"] = c.spec.pu_tau ? nlohmann::json(*c.spec.pu_tau) : nlohmann::json(nullptr);
  j["un-nonneg"] = c.spec.un_nonneg == ordinal::Nonneg::Relu ? "relu" : "softplus";
  j["hidden"] = c.hidden;
  j["epochs"] = c.epochs;
  j["lr"] = c.lr;
  j["seed"] = c.seed;
  j["batch-size"] = c.batch_size;
  j["max-seconds"] = c.max_seconds;
  j["fold-seed"] = c.fold_seed;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ContractViolation("config must be a JSON object");
  ExperimentConfig c = make_config(j.value("dataset", std::string{}), j.value("loss", std::string{"ce"}));
  for (const auto& [key, v] : j.items()) {
    if (key == "dataset" || key == "loss") continue;
    if (key == "lambda") c.spec.lambda = v.get<double>();
    else if (key == "delta") c.spec.delta = v.get<double>();
    else if (key == "r") c.spec.cost_exponent = v.get<double>();
    else if (key == "alpha") c.spec.cdw_alpha = v.get<double>();
    else if (key == "tau") c.spec.pu_tau = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    else if (key == "un-nonneg") {
      const auto s = v.get<std::string>();
      if (s != "relu" && s != "softplus") throw ContractViolation("un-nonneg must be relu or softplus");
      c.spec.un_nonneg = s == "relu" ? ordinal::Nonneg::Relu : ordinal::Nonneg::Softplus;
    } else if (key == "hidden") c.hidden = v.get<int>();
    else if (key == "epochs") c.epochs = v.get<int>();
    else if (key == "lr") c.lr = v.get<double>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "batch-size") c.batch_size = v.get<int>();
    else if (key == "max-seconds") c.max_seconds = v.get<double>();
    else if (key == "fold-seed") c.fold_seed = v.get<std::uint64_t>();
    else throw ContractViolation("unknown config key: " + key);
  }
  return c;
}

int effective_batch_size(const ExperimentConfig& c, std::size_t rows) {
  if (c.batch_size > 0) return c.batch_size;
  return rows <= 5000 ? static_cast<int>(rows) : 256;
}

TrainResult train(const ExperimentConfig& config, const Matrix& x, std::span<const int> labels,
                  int k) {
  if (config.is_dummy()) throw ContractViolation("the dummy baseline is not trained");
  if (x.rows() != static_cast<Eigen::Index>(labels.size()) || x.rows() == 0) {
    throw ContractViolation("train: feature rows and labels disagree or are empty");
  }
  if (config.epochs < 0 || config.lr <= 0.0) throw ContractViolation("train: bad epochs or lr");
  keep_large_blocks_on_heap();
  TrainResult result{model::Model(static_cast<int>(x.cols()), config.hidden, k, config.spec, config.seed), {}};
  auto& params = result.model.params();
  auto adam = ad::make_adam(params, config.lr);
  const auto n = labels.size();
  const auto batch = static_cast<std::size_t>(effective_batch_size(config, n));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed ^ 0x5bd1e995ULL);
  const auto start = std::chrono::steady_clock::now();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t lo = 0; lo < n; lo += batch) {
      const auto rows = std::span<const int>(order).subspan(lo, std::min(batch, n - lo));
      const bool whole = rows.size() == n && batch >= n;
      const Matrix xb = whole ? x : take_rows(x, rows);
      const std::vector<int> yb = whole ? std::vector<int>(labels.begin(), labels.end()) : take(labels, rows);
      ad::Tape tape;
      const auto bound = params.bind(tape);
      const auto out = result.model.forward(tape, bound, xb);
      const ad::Var loss = ordinal::loss(config.spec, out, yb);
      const double v = loss.value()(0, 0);
      if (!std::isfinite(v)) {
        throw TrainingAborted("non-finite loss " + std::to_string(v) + " at epoch " +
                              std::to_string(epoch) + " (" + config.method + ", lambda " +
                              lambda_text(config.spec.lambda) + ")");
      }
      tape.backward(loss);
      const auto grads = params.gradients(bound);
      ad::adam_step(params, grads, adam);
      total += v * static_cast<double>(rows.size());
    }
    result.loss_history.push_back(total / static_cast<double>(n));
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    if (elapsed.count() > config.max_seconds) {
      throw TrainingAborted("wall-clock cap of " + std::to_string(config.max_seconds) +
                            " s reached at epoch " + std::to_string(epoch + 1));
    }
  }
  return result;
}

MetricsReport evaluate(const Matrix& distributions, std::span<const int> predicted,
                       std::span<const int> truth) {
  if (predicted.size() != truth.size() ||
      distributions.rows() != static_cast<Eigen::Index>(truth.size())) {
    throw ContractViolation("evaluate: size mismatch");
  }
  MetricsReport r;
  r.n = truth.size();
  if (r.n == 0) return r;
  std::size_t hits = 0, unimodal = 0;
  double abs_err = 0.0;
  std::vector<double> row(static_cast<std::size_t>(distributions.cols()));
  for (std::size_t i = 0; i < r.n; ++i) {
    hits += predicted[i] == truth[i];
    abs_err += std::abs(predicted[i] - truth[i]);
    for (std::size_t c = 0; c < row.size(); ++c) {
      row[c] = distributions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    }
    unimodal += simplex::is_unimodal(row);
  }
  const double n = static_cast<double>(r.n);
  r.accuracy = 100.0 * static_cast<double>(hits) / n;
  r.mae = abs_err / n;
  r.unimodality = 100.0 * static_cast<double>(unimodal) / n;
  return r;
}

MetricsReport evaluate(const model::Model& m, const Matrix& x, std::span<const int> truth) {
  ad::Tape tape;
  const auto bound = m.params().bind(tape);
  const auto out = m.forward(tape, bound, x);
  return evaluate(ordinal::distributions(out), ordinal::predict_labels(out), truth);
}

int majority_label(std::span<const int> train_labels, int k) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int l : train_labels) ++counts.at(static_cast<std::size_t>(l - 1));
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin()) + 1;
}

MetricsReport run_fold(const ExperimentConfig& config, const data::TabularDataset& ds,
                       const data::FoldSplit& split, int fold) {
  const auto train_rows = split.complement(fold);
  const auto& test_rows = split.folds.at(static_cast<std::size_t>(fold));
  const auto train_labels = take(ds.labels, train_rows);
  const auto test_labels = take(ds.labels, test_rows);
  if (config.is_dummy()) {
    const int label = majority_label(train_labels, ds.k);
    Matrix dist = Matrix::Zero(static_cast<Eigen::Index>(test_rows.size()), ds.k);
    dist.col(label - 1).setOnes();
    const std::vector<int> predicted(test_rows.size(), label);
    return evaluate(dist, predicted, test_labels);
  }
  const auto transform = data::FeatureTransform::fit(ds, train_rows);
  const Matrix x_train = transform.apply(ds, train_rows);
  const Matrix x_test = transform.apply(ds, test_rows);
  const auto trained = train(config, x_train, train_labels, ds.k);
  return evaluate(trained.model, x_test, test_labels);
}

Summary summarize(std::span<const MetricsReport> runs) {
  Summary s;
  s.runs.assign(runs.begin(), runs.end());
  if (runs.empty()) return s;
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    s.mean.accuracy += r.accuracy / n;
    s.mean.mae += r.mae / n;
    s.mean.unimodality += r.unimodality / n;
    s.mean.n += r.n;
  }
  if (runs.size() > 1) {
    for (const auto& r : runs) {
      s.stddev.accuracy += std::pow(r.accuracy - s.mean.accuracy, 2) / (n - 1);
      s.stddev.mae += std::pow(r.mae - s.mean.mae, 2) / (n - 1);
      s.stddev.unimodality += std::pow(r.unimodality - s.mean.unimodality, 2) / (n - 1);
    }
    s.stddev.accuracy = std::sqrt(s.stddev.accuracy);
    s.stddev.mae = std::sqrt(s.stddev.mae);
    s.stddev.unimodality = std::sqrt(s.stddev.unimodality);
  }
  s.stddev.n = runs.size();
  return s;
}

Summary cross_validate(const ExperimentConfig& config, const data::TabularDataset& ds,
                       const data::FoldSplit& split, std::span<const std::uint64_t> seeds,
                       int threads) {
  const std::size_t folds = static_cast<std::size_t>(split.k_folds - 1);
  std::vector<MetricsReport> runs(seeds.size() * folds);
  parallel_for(runs.size(), threads, [&](std::size_t job) {
    ExperimentConfig c = config;
    c.seed = seeds[job / folds];
    runs[job] = run_fold(c, ds, split, static_cast<int>(job % folds) + 1);
  });
  return summarize(runs);
}

std::vector<double> default_lambda_grid() { return {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}; }

SweepResult lambda_sweep(const ExperimentConfig& config, const data::TabularDataset& ds,
                         const data::FoldSplit& split, std::span<const double> lambdas,
                         std::span<const std::uint64_t> seeds, int threads) {
  if (config.is_dummy() || !ordinal::has_penalty(config.spec.kind)) {
    throw ContractViolation("lambda sweep needs a loss with a penalty term");
  }
  if (lambdas.empty() || seeds.empty()) throw ContractViolation("lambda sweep: empty grid or seeds");
  const std::size_t folds = static_cast<std::size_t>(split.k_folds);
  const std::size_t per_lambda = seeds.size() * folds;
  std::vector<MetricsReport> runs(lambdas.size() * per_lambda);
  parallel_for(runs.size(), threads, [&](std::size_t job) {
    ExperimentConfig c = config;
    c.spec.lambda = lambdas[job / per_lambda];
    c.seed = seeds[(job % per_lambda) / folds];
    runs[job] = run_fold(c, ds, split, static_cast<int>(job % folds));
  });

  SweepResult out;
  std::vector<MetricsReport> validation;
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    std::vector<MetricsReport> val, eval;
    for (std::size_t j = 0; j < per_lambda; ++j) {
      const auto& r = runs[l * per_lambda + j];
      (j % folds == 0 ? val : eval).push_back(r);
    }
    SweepRow row;
    row.lambda = lambdas[l];
    row.validation = mean_of(val);
    row.evaluation = summarize(eval);
    validation.push_back(row.validation);
    out.rows.push_back(std::move(row));
  }
  out.selected = pick_best(validation);
  return out;
}

LambdaSelection select_lambda(const ExperimentConfig& config, const data::TabularDataset& ds,
                              const data::FoldSplit& split, std::span<const double> lambdas,
                              std::span<const std::uint64_t> seeds, int threads) {
  if (lambdas.empty() || seeds.empty()) throw ContractViolation("select_lambda: empty grid or seeds");
  std::vector<MetricsReport> runs(lambdas.size() * seeds.size());
  parallel_for(runs.size(), threads, [&](std::size_t job) {
    ExperimentConfig c = config;
    c.spec.lambda = lambdas[job / seeds.size()];
    c.seed = seeds[job % seeds.size()];
    runs[job] = run_fold(c, ds, split, 0);
  });
  LambdaSelection out;
  out.lambdas.assign(lambdas.begin(), lambdas.end());
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    out.validation.push_back(mean_of(std::span(runs).subspan(l * seeds.size(), seeds.size())));
  }
  out.selected = pick_best(out.validation);
  return out;
}

std::vector<double> rank(std::span<const double> values, bool higher_is_better) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto better = [&](std::size_t a, std::size_t b) {
    return higher_is_better ? values[a] > values[b] : values[a] < values[b];
  };
  std::stable_sort(idx.begin(), idx.end(), better);
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = shared;
    i = j + 1;
  }
  return ranks;
}

void compute_aggregates(BenchTable& table) {
  const std::size_t m = table.methods.size();
  table.aggregates.assign(m, {});
  std::size_t complete = 0;
  for (const auto& dataset : table.datasets) {
    std::vector<const BenchRow*> rows(m, nullptr);
    bool ok = true;
    for (const auto& r : table.rows) {
      if (r.dataset != dataset) continue;
      const auto it = std::find(table.methods.begin(), table.methods.end(), r.method);
      if (it == table.methods.end()) continue;
      rows[static_cast<std::size_t>(it - table.methods.begin())] = &r;
    }
    for (const auto* r : rows) ok = ok && r != nullptr && r->error.empty();
    if (!ok) continue;
    ++complete;
    std::vector<double> acc, mae, uni;
    for (const auto* r : rows) {
      acc.push_back(r->summary.mean.accuracy);
      mae.push_back(r->summary.mean.mae);
      uni.push_back(r->summary.mean.unimodality);
    }
    const auto ra = rank(acc, true), rm = rank(mae, false), ru = rank(uni, true);
    for (std::size_t i = 0; i < m; ++i) {
      auto& a = table.aggregates[i];
      a.mean.accuracy += acc[i];
      a.mean.mae += mae[i];
      a.mean.unimodality += uni[i];
      a.rank_accuracy += ra[i];
      a.rank_mae += rm[i];
      a.rank_unimodality += ru[i];
    }
  }
  for (auto& a : table.aggregates) {
    const double d = complete == 0 ? std::nan("") : static_cast<double>(complete);
    a.mean.accuracy /= d;
    a.mean.mae /= d;
    a.mean.unimodality /= d;
    a.rank_accuracy /= d;
    a.rank_mae /= d;
    a.rank_unimodality /= d;
    a.mean.n = complete;
  }
}

std::string to_csv(const BenchTable& table) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "dataset,method,lambda,accuracy,accuracy_std,mae,mae_std,unimodality,unimodality_std,"
        "runs,rank_accuracy,rank_mae,rank_unimodality,error\n";
  for (const auto& r : table.rows) {
    os << r.dataset << ',' << r.method << ',' << (r.lambda ? lambda_text(*r.lambda) : "") << ',';
    if (r.error.empty()) {
      const auto& s = r.summary;
      os << s.mean.accuracy << ',' << s.stddev.accuracy << ',' << s.mean.mae << ','
         << s.stddev.mae << ',' << s.mean.unimodality << ',' << s.stddev.unimodality << ','
         << s.runs.size() << ",,,,\n";
    } else {
      os << ",,,,,,0,,,,\"" << r.error << "\"\n";
    }
  }
  for (std::size_t i = 0; i < table.aggregates.size(); ++i) {
    const auto& a = table.aggregates[i];
    os << "average," << table.methods[i] << ",," << a.mean.accuracy << ",," << a.mean.mae << ",,"
       << a.mean.unimodality << ",," << a.mean.n << ',' << a.rank_accuracy << ',' << a.rank_mae
       << ',' << a.rank_unimodality << ",\n";
  }
  return os.str();
}

std::string to_text(const BenchTable& table) {
  std::vector<std::vector<std::string>> cells{
      {"dataset", "method", "lambda", "accuracy", "mae", "%unimodal", "rank acc", "rank mae"}};
  for (const auto& r : table.rows) {
    if (!r.error.empty()) {
      cells.push_back({r.dataset, r.method, "", "error: " + r.error, "", "", "", ""});
      continue;
    }
    const auto& s = r.summary;
    cells.push_back({r.dataset, r.method, r.lambda ? lambda_text(*r.lambda) : "",
                     fixed(s.mean.accuracy, 2) + "±" + fixed(s.stddev.accuracy, 2),
                     fixed(s.mean.mae, 3) + "±" + fixed(s.stddev.mae, 3),
                     fixed(s.mean.unimodality, 2) + "±" + fixed(s.stddev.unimodality, 2), "", ""});
  }
  for (std::size_t i = 0; i < table.aggregates.size(); ++i) {
    const auto& a = table.aggregates[i];
    cells.push_back({"average", table.methods[i], "", fixed(a.mean.accuracy, 2),
                     fixed(a.mean.mae, 3), fixed(a.mean.unimodality, 2),
                     fixed(a.rank_accuracy, 2), fixed(a.rank_mae, 2)});
  }
  // "±" is two bytes but one column.
  const auto width = [](const std::string& s) {
    return s.size() - static_cast<std::size_t>(std::count(s.begin(), s.end(), '\xC2'));
  };
  std::vector<std::size_t> w(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) w[c] = std::max(w[c], width(row[c]));
  }
  std::ostringstream os;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      os << row[c];
      if (c + 1 < row.size()) os << std::string(w[c] - width(row[c]) + 2, ' ');
    }
    os << '\n';
  }
  return os.str();
}

std::string sweep_csv(const SweepResult& sweep) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "lambda,val_accuracy,val_mae,val_unimodality,accuracy,accuracy_std,mae,mae_std,"
        "unimodality,unimodality_std,selected\n";
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto& r = sweep.rows[i];
    const auto& e = r.evaluation;
    os << r.lambda << ',' << r.validation.accuracy << ',' << r.validation.mae << ','
       << r.validation.unimodality << ',' << e.mean.accuracy << ',' << e.stddev.accuracy << ','
       << e.mean.mae << ',' << e.stddev.mae << ',' << e.mean.unimodality << ','
       << e.stddev.unimodality << ',' << (i == sweep.selected ? 1 : 0) << '\n';
  }
  return os.str();
}

BenchTable run_benchmark(std::span<const std::string> datasets,
                         std::span<const std::string> methods, const BenchOptions& options) {
  if (methods.empty()) throw ContractViolation("run_benchmark needs at least one method");
  BenchTable table;
  table.methods.assign(methods.begin(), methods.end());
  table.datasets.assign(datasets.begin(), datasets.end());
  for (const auto& id : datasets) {
    std::optional<data::TabularDataset> ds;
    std::optional<data::FoldSplit> split;
    std::string load_error;
    try {
      ds = data::load_dataset(id, options.data_dir);
      split = data::stratified_kfold(ds->labels, 5, 0);
    } catch (const std::exception& e) {
      load_error = e.what();
    }
    for (const auto& method : methods) {
      BenchRow row{id, method, std::nullopt, {}, load_error};
      if (load_error.empty()) {
        try {
          auto config = make_config(id, method);
          config.epochs = options.epochs;
          if (!config.is_dummy() && ordinal::has_penalty(config.spec.kind)) {
            config.spec.lambda =
                select_lambda(config, *ds, *split, options.lambdas, options.seeds, options.threads).lambda();
            row.lambda = config.spec.lambda;
          }
          row.summary = cross_validate(config, *ds, *split, options.seeds, options.threads);
        } catch (const std::exception& e) {
          row.error = e.what();
        }
      }
      table.rows.push_back(std::move(row));
    }
  }
  compute_aggregates(table);
  return table;
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

RunLog::RunLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  if (!std::filesystem::exists(path_)) {
    std::ofstream(path_) << "hash\tfold\taccuracy\tmae\tunimodality\tn\tconfig\n";
  }
}

void RunLog::append(const ExperimentConfig& config, const std::string& data_hash,
                    const MetricsReport& metrics, int fold) {
  const std::string cfg = to_json(config).dump();
  std::ostringstream line;
  line << std::setprecision(10) << content_hash(cfg + data_hash) << '\t' << fold << '\t'
       << metrics.accuracy << '\t' << metrics.mae << '\t' << metrics.unimodality << '\t'
       << metrics.n << '\t' << cfg << '\n';
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app);
  out << line.str();
  if (!out) throw std::runtime_error("cannot append to " + path_.string());
}

void parallel_for(std::size_t jobs, int threads, const std::function<void(std::size_t)>& task) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, jobs);
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = jobs;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace unimodal::bench
