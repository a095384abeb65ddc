#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "unimodal/bench.hpp"
#include "unimodal/lp.hpp"
#include "unimodal/model.hpp"
#include "unimodal/simplex.hpp"
#include "unimodal/transport.hpp"

using namespace unimodal;

namespace {

const std::vector<std::string> kTabularSuite{"balance-scale", "car", "abalone10", "new-thyroid"};

Distribution parse_dist(const std::string& text) { return Distribution(parse_csv_doubles(text)); }

std::vector<std::uint64_t> seed_range(int n) {
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < n; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  return seeds;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void print_metrics(const std::string& label, const bench::MetricsReport& m) {
  std::cout << label << "  accuracy " << std::fixed << std::setprecision(2) << m.accuracy
            << "  mae " << std::setprecision(3) << m.mae << "  %unimodal " << std::setprecision(2)
            << m.unimodality << "  n " << m.n << '\n';
  std::cout.unsetf(std::ios::floatfield);
}

// Experiment flags shared by train and sweep. Values set on the command line
// override the same keys from --config.
struct ExperimentFlags {
  std::string config_file;
  std::string dataset;
  std::string loss;
  double lambda = 0, delta = 0, r = 0, alpha = 0, tau = 0, lr = 0, max_seconds = 0;
  int hidden = 0, epochs = 0, batch_size = 0;
  std::uint64_t seed = 0;
  std::vector<CLI::Option*> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON config file (keys as the flags)")->check(CLI::ExistingFile);
    options = {
        app->add_option("--dataset", dataset, "dataset id"),
        app->add_option("--loss", loss, "loss name or 'dummy'"),
        app->add_option("--lambda", lambda, "penalty weight"),
        app->add_option("--delta", delta, "margin of co2/uu"),
        app->add_option("--r", r, "Wasserstein cost exponent"),
        app->add_option("--alpha", alpha, "cdw-ce exponent"),
        app->add_option("--tau", tau, "fixed Poisson temperature"),
        app->add_option("--hidden", hidden, "hidden units"),
        app->add_option("--epochs", epochs, "training epochs"),
        app->add_option("--lr", lr, "Adam learning rate"),
        app->add_option("--seed", seed, "initialization seed"),
        app->add_option("--batch-size", batch_size, "0 = automatic"),
        app->add_option("--max-seconds", max_seconds, "per-run wall-clock cap"),
    };
  }

  bench::ExperimentConfig resolve(const std::string& default_loss) const {
    nlohmann::json j = nlohmann::json::object();
    if (!config_file.empty()) j = nlohmann::json::parse(read_file(config_file));
    if (!j.contains("loss")) j["loss"] = default_loss;
    for (auto* opt : options) {
      if (opt->count() == 0) continue;
      const std::string key = opt->get_name().substr(2);
      const std::string raw = opt->as<std::string>();
      if (key == "dataset" || key == "loss") {
        j[key] = raw;
      } else if (key == "hidden" || key == "epochs" || key == "batch-size") {
        j[key] = std::stoi(raw);
      } else if (key == "seed") {
        j[key] = std::stoull(raw);
      } else {
        j[key] = std::stod(raw);
      }
    }
    auto c = bench::config_from_json(j);
    if (c.dataset.empty()) throw std::runtime_error("--dataset is required");
    return c;
  }
};

int cmd_lp_solve(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file);
  const auto lp = lp::read_lp(in);
  const auto sol = lp::solve(lp);
  std::cout << "status " << lp::to_string(sol.status) << '\n';
  if (sol.status == lp::LpStatus::Optimal) {
    std::cout << std::setprecision(12) << "objective " << sol.objective_value << '\n'
              << "x " << format_doubles(std::span(sol.x.data(), static_cast<std::size_t>(sol.x.size())), 12)
              << '\n'
              << "iterations " << sol.iterations << '\n'
              << "verified " << (lp::verify_solution(lp, sol) ? "yes" : "no") << '\n';
  }
  return 0;
}

int cmd_check_grad(const std::string& loss, int k, int draws, std::uint64_t seed) {
  std::vector<std::string> losses;
  if (loss == "all") {
    losses = ordinal::registered_losses();
  } else {
    losses = {loss};
  }
  bool ok = true;
  for (const auto& name : losses) {
    const auto spec = ordinal::default_spec(ordinal::parse_loss(name));
    double worst = 0.0;
    int accepted = 0, rejected = 0;
    for (std::uint64_t s = seed; accepted < draws; ++s) {
      const auto check = model::check_loss_gradient(spec, k, s);
      if (check.kink_margin < 1e-3) {
        ++rejected;
        continue;
      }
      worst = std::max(worst, check.report.max_relative_error);
      ++accepted;
    }
    const bool pass = worst < 1e-4;
    ok = ok && pass;
    std::cout << std::left << std::setw(9) << name << " max relative error " << std::scientific
              << std::setprecision(3) << worst << std::defaultfloat << " over " << accepted
              << " draws (" << rejected << " near kinks redrawn)  " << (pass ? "ok" : "FAIL") << '\n';
  }
  return ok ? 0 : 2;
}

int cmd_train(const bench::ExperimentConfig& config, const std::string& data_dir, int fold,
              const std::string& log_path) {
  const auto desc = data::read_descriptor(std::filesystem::path(data_dir) / "descriptors" / (config.dataset + ".json"));
  const auto ds = data::load_dataset(config.dataset, data_dir);
  const auto split = data::stratified_kfold(ds.labels, 5, config.fold_seed);
  for (const auto& w : split.warnings) std::cerr << "warning: " << w << '\n';
  std::optional<bench::RunLog> log;
  std::string data_hash;
  if (!log_path.empty()) {
    log.emplace(log_path);
    data_hash = bench::content_hash(read_file(std::filesystem::path(data_dir) / desc.file));
  }
  std::cout << "config " << bench::to_json(config).dump() << '\n';
  std::vector<int> folds;
  if (fold > 0) {
    folds = {fold};
  } else {
    for (int f = 2; f <= split.k_folds; ++f) folds.push_back(f);
  }
  std::vector<bench::MetricsReport> runs;
  for (int f : folds) {
    const auto m = bench::run_fold(config, ds, split, f - 1);
    print_metrics("fold " + std::to_string(f), m);
    if (log) log->append(config, data_hash, m, f);
    runs.push_back(m);
  }
  if (runs.size() > 1) {
    const auto s = bench::summarize(runs);
    print_metrics("mean  ", s.mean);
    print_metrics("std   ", s.stddev);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unimodal ordinal classification toolkit"};
  app.require_subcommand(1);

  auto* geometry = app.add_subcommand("geometry", "simplex geometry of unimodal distributions");
  geometry->require_subcommand(1);
  int frac_k = 3;
  std::size_t mc_samples = 0;
  std::uint64_t mc_seed = 0;
  auto* fraction = geometry->add_subcommand("fraction", "unimodal share of the simplex");
  fraction->add_option("--k", frac_k, "number of classes")->required();
  fraction->add_option("--mc-samples", mc_samples, "also estimate by Monte Carlo");
  fraction->add_option("--seed", mc_seed, "Monte Carlo seed");

  std::string dist_text;
  int mode = 0;
  auto* check = geometry->add_subcommand("check", "test a distribution for unimodality");
  check->add_option("--dist", dist_text, "comma-separated probabilities")->required();
  check->add_option("--mode", mode, "require this mode (1-based)");

  int steps = 4;
  auto* path = geometry->add_subcommand("path", "unimodal path to the one-hot at the mode");
  path->add_option("--dist", dist_text, "starting distribution, unimodal with --mode")->required();
  path->add_option("--mode", mode, "mode (1-based)")->required();
  path->add_option("--steps", steps, "waypoints per stage");

  double exponent = 1.0;
  auto* project = app.add_subcommand("project", "Wasserstein projection onto a fixed-mode unimodal set");
  project->add_option("--dist", dist_text, "distribution to project")->required();
  project->add_option("--mode", mode, "mode (1-based)")->required();
  project->add_option("--exponent", exponent, "cost |i-j|^r");

  std::string p_text, q_text;
  auto* distance = app.add_subcommand("distance", "Wasserstein distance, LP and CDF forms");
  distance->add_option("--p", p_text, "first distribution")->required();
  distance->add_option("--q", q_text, "second distribution")->required();
  distance->add_option("--exponent", exponent, "cost |i-j|^r for the LP");

  std::string grad_loss = "all";
  int grad_k = 4, grad_draws = 50;
  std::uint64_t grad_seed = 0;
  auto* check_grad = app.add_subcommand("check-grad", "finite-difference check of a loss");
  check_grad->add_option("--loss", grad_loss, "loss name or 'all'");
  check_grad->add_option("--k", grad_k, "number of classes");
  check_grad->add_option("--draws", grad_draws, "accepted random draws");
  check_grad->add_option("--seed", grad_seed, "first seed");

  std::string data_dir = "data";
  ExperimentFlags train_flags;
  int train_fold = 0;
  std::string log_path;
  auto* train = app.add_subcommand("train", "train and evaluate one configuration");
  train_flags.attach(train);
  train->add_option("--data-dir", data_dir, "directory holding descriptors/ and data files");
  train->add_option("--fold", train_fold, "single evaluation fold 1..5 (default: folds 2..5)");
  train->add_option("--log", log_path, "append run records to this file");

  std::string suite = "tabular", out_dir;
  std::vector<std::string> methods;
  int n_seeds = 1, threads = 0, bench_epochs = 1000;
  std::vector<double> lambdas = bench::default_lambda_grid();
  auto* bench_cmd = app.add_subcommand("bench", "every method on a dataset suite");
  bench_cmd->add_option("--suite", suite, "suite name")->check(CLI::IsMember({"tabular"}));
  bench_cmd->add_option("--out", out_dir, "output directory")->required();
  bench_cmd->add_option("--methods", methods, "methods (default: dummy and every loss)")->delimiter(',');
  bench_cmd->add_option("--seeds", n_seeds, "seeds 0..n-1");
  bench_cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
  bench_cmd->add_option("--epochs", bench_epochs, "training epochs");
  bench_cmd->add_option("--lambdas", lambdas, "lambda grid for penalty losses")->delimiter(',');
  bench_cmd->add_option("--data-dir", data_dir, "data directory");

  ExperimentFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "lambda sweep for one dataset and loss");
  sweep_flags.attach(sweep);
  sweep->add_option("--out", out_dir, "output directory")->required();
  sweep->add_option("--seeds", n_seeds, "seeds 0..n-1");
  sweep->add_option("--threads", threads, "worker threads (0 = all cores)");
  sweep->add_option("--lambdas", lambdas, "lambda grid")->delimiter(',');
  sweep->add_option("--data-dir", data_dir, "data directory");

  std::string lp_file;
  auto* lp_cmd = app.add_subcommand("lp", "linear programming utilities");
  lp_cmd->require_subcommand(1);
  auto* lp_solve = lp_cmd->add_subcommand("solve", "solve a plain-text LP");
  lp_solve->add_option("--file", lp_file, "LP file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fraction) {
      const auto exact = simplex::unimodal_fraction(frac_k);
      std::cout << std::setprecision(12) << "us " << exact.us << "\nns " << exact.ns << '\n';
      if (mc_samples > 0) {
        const auto mc = simplex::estimate_unimodal_fraction_mc(frac_k, mc_samples, mc_seed);
        std::cout << "mc " << mc.estimate << " +- " << mc.stderr_ << " ("
                  << std::abs(mc.estimate - exact.us) / mc.stderr_ << " stderr from exact)\n";
      }
    } else if (*check) {
      const auto p = parse_dist(dist_text);
      if (mode > 0) {
        std::cout << (simplex::is_unimodal_with_mode(p, ModeIndex(mode)) ? "true" : "false") << '\n';
      } else {
        const auto ms = simplex::modes(p);
        std::cout << (ms.empty() ? "false" : "true");
        if (!ms.empty()) {
          std::cout << " modes";
          for (auto m : ms) std::cout << ' ' << m.value;
        }
        std::cout << '\n';
      }
    } else if (*path) {
      for (const auto& w : simplex::connectedness_path(parse_dist(dist_text), ModeIndex(mode), steps)) {
        std::cout << format_doubles(w.values()) << '\n';
      }
    } else if (*project) {
      const auto q = parse_dist(dist_text);
      const auto cost = transport::CostMatrix::power(static_cast<int>(q.size()), exponent);
      const auto proj = transport::project_unimodal(q, ModeIndex(mode), cost);
      std::cout << "projection " << format_doubles(proj.projection.values(), 10) << '\n'
                << std::setprecision(12) << "distance " << proj.distance << "\nplan\n";
      for (Eigen::Index i = 0; i < proj.plan.t.rows(); ++i) {
        const Eigen::VectorXd row = proj.plan.t.row(i);
        std::cout << "  " << format_doubles(std::span(row.data(), static_cast<std::size_t>(row.size())), 6) << '\n';
      }
    } else if (*distance) {
      const auto p = parse_dist(p_text), q = parse_dist(q_text);
      const auto lp_value =
          transport::wasserstein_distance(p, q, transport::CostMatrix::power(static_cast<int>(p.size()), exponent)).value;
      std::cout << std::setprecision(12) << "lp  " << lp_value << '\n';
      if (exponent == 1.0) std::cout << "cdf " << transport::wasserstein_distance_cdf(p, q) << '\n';
    } else if (*check_grad) {
      return cmd_check_grad(grad_loss, grad_k, grad_draws, grad_seed);
    } else if (*train) {
      return cmd_train(train_flags.resolve("ce"), data_dir, train_fold, log_path);
    } else if (*bench_cmd) {
      if (methods.empty()) {
        methods = {bench::kDummy};
        for (const auto& l : ordinal::registered_losses()) methods.push_back(l);
      }
      bench::BenchOptions options;
      options.data_dir = data_dir;
      options.seeds = seed_range(n_seeds);
      options.threads = threads;
      options.epochs = bench_epochs;
      options.lambdas = lambdas;
      const auto table = bench::run_benchmark(kTabularSuite, methods, options);
      write_file(std::filesystem::path(out_dir) / "results.csv", bench::to_csv(table));
      write_file(std::filesystem::path(out_dir) / "results.txt", bench::to_text(table));
      std::cout << bench::to_text(table);
    } else if (*sweep) {
      const auto config = sweep_flags.resolve("wu-kldiv");
      const auto ds = data::load_dataset(config.dataset, data_dir);
      const auto split = data::stratified_kfold(ds.labels, 5, config.fold_seed);
      const auto result = bench::lambda_sweep(config, ds, split, lambdas, seed_range(n_seeds), threads);
      const auto csv = bench::sweep_csv(result);
      write_file(std::filesystem::path(out_dir) / (config.dataset + "-" + config.method + "-sweep.csv"), csv);
      std::cout << "config " << bench::to_json(config).dump() << '\n' << csv;
    } else if (*lp_solve) {
      return cmd_lp_solve(lp_file);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
