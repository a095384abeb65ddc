#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "unimodal/bench.hpp"
#include "unimodal/data.hpp"
#include "unimodal/model.hpp"
#include "unimodal/ordinal.hpp"
#include "unimodal/simplex.hpp"
#include "unimodal/transport.hpp"

namespace py = pybind11;
using namespace unimodal;

namespace {

Distribution dist(const std::vector<double>& p) { return Distribution(p); }

ordinal::Nonneg nonneg(const std::string& name) {
  if (name == "relu") return ordinal::Nonneg::Relu;
  if (name == "softplus") return ordinal::Nonneg::Softplus;
  throw ContractViolation("nonneg must be 'relu' or 'softplus'");
}

transport::CostMatrix cost_for(std::size_t k, double exponent) {
  return transport::CostMatrix::power(static_cast<int>(k), exponent);
}

py::dict metrics_dict(const bench::MetricsReport& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["mae"] = m.mae;
  d["unimodality"] = m.unimodality;
  d["n"] = m.n;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Unimodal ordinal classification: geometry, transport, heads, losses, benchmarks";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<data::DataError>(m, "DataError", PyExc_RuntimeError);

  // geometry
  m.def(
      "is_unimodal",
      [](const std::vector<double>& p, std::optional<int> mode, double tol) {
        return mode ? simplex::is_unimodal_with_mode(dist(p), ModeIndex(*mode), tol)
                    : simplex::is_unimodal(dist(p), tol);
      },
      py::arg("p"), py::arg("mode") = py::none(), py::arg("tol") = simplex::kDefaultTolerance);
  m.def("modes", [](const std::vector<double>& p) {
    std::vector<int> out;
    for (auto k : simplex::modes(dist(p))) out.push_back(k.value);
    return out;
  });
  m.def("unimodal_fraction", [](int k) {
    const auto f = simplex::unimodal_fraction(k);
    return std::make_pair(f.us, f.ns);
  });
  m.def(
      "estimate_unimodal_fraction_mc",
      [](int k, std::size_t n, std::uint64_t seed) {
        const auto e = simplex::estimate_unimodal_fraction_mc(k, n, seed);
        return std::make_pair(e.estimate, e.stderr_);
      },
      py::arg("k"), py::arg("n"), py::arg("seed") = 0);

  // transport
  m.def(
      "wasserstein_distance",
      [](const std::vector<double>& p, const std::vector<double>& q, double exponent) {
        return transport::wasserstein_distance(dist(p), dist(q), cost_for(p.size(), exponent)).value;
      },
      py::arg("p"), py::arg("q"), py::arg("exponent") = 1.0);
  m.def("wasserstein_distance_cdf", [](const std::vector<double>& p, const std::vector<double>& q) {
    return transport::wasserstein_distance_cdf(dist(p), dist(q));
  });
  m.def(
      "project_unimodal",
      [](const std::vector<double>& q, int mode, double exponent) {
        const auto r = transport::project_unimodal(dist(q), ModeIndex(mode), cost_for(q.size(), exponent));
        return std::make_tuple(r.projection.vector(), r.distance, r.plan.t);
      },
      py::arg("q"), py::arg("mode"), py::arg("exponent") = 1.0);

  // heads and losses on single samples
  m.def(
      "unimodal_net_head",
      [](const std::vector<double>& z, const std::string& nn) {
        return ordinal::unimodal_net_head(z, nonneg(nn)).vector();
      },
      py::arg("z"), py::arg("nonneg") = "softplus");
  m.def("binomial_head", [](double logit, int k) { return ordinal::binomial_head(logit, k).vector(); });
  m.def(
      "poisson_head",
      [](double raw, int k, double tau) { return ordinal::poisson_head(raw, k, tau).vector(); },
      py::arg("raw"), py::arg("k"), py::arg("tau") = 1.0);
  m.def("ordinal_encoding_head", [](const std::vector<double>& z) {
    const auto o = ordinal::ordinal_encoding_head(z);
    return std::make_tuple(o.cumulative, o.distribution.vector(), o.label.value);
  });
  m.def("ce_loss", [](int label, const std::vector<double>& p) {
    return ordinal::ce_loss(ModeIndex(label), dist(p));
  });
  m.def("u_term", [](double delta, int label, const std::vector<double>& p) {
    return ordinal::u_term(delta, ModeIndex(label), dist(p));
  });
  m.def("uu_term", [](double delta, int label, const std::vector<double>& p) {
    return ordinal::uu_term(delta, ModeIndex(label), dist(p));
  });
  m.def("co2_loss", [](double delta, double lambda, int label, const std::vector<double>& p) {
    return ordinal::co2_loss(delta, lambda, ModeIndex(label), dist(p));
  });
  m.def(
      "cdw_ce_loss",
      [](int label, const std::vector<double>& p, double alpha) {
        return ordinal::cdw_ce_loss(ModeIndex(label), dist(p), alpha);
      },
      py::arg("label"), py::arg("p"), py::arg("alpha") = 1.0);
  m.def(
      "wu_loss",
      [](int label, const std::vector<double>& p, double lambda, const std::string& d2, double exponent) {
        if (d2 != "kldiv" && d2 != "wass") throw ContractViolation("d2 must be 'kldiv' or 'wass'");
        const auto v = ordinal::wu_loss(ModeIndex(label), dist(p), lambda,
                                        d2 == "kldiv" ? ordinal::D2::KLDiv : ordinal::D2::Wasserstein,
                                        cost_for(p.size(), exponent));
        py::dict d;
        d["ce"] = v.ce;
        d["penalty"] = v.penalty;
        d["total"] = v.total;
        d["projection"] = v.projection.vector();
        return d;
      },
      py::arg("label"), py::arg("p"), py::arg("lambda_") = 1.0, py::arg("d2") = "kldiv",
      py::arg("exponent") = 1.0);
  m.def("registered_losses", &ordinal::registered_losses);
  m.def(
      "check_loss_gradient",
      [](const std::string& loss, int k, std::uint64_t seed) {
        const auto c = model::check_loss_gradient(ordinal::default_spec(ordinal::parse_loss(loss)), k, seed);
        return std::make_pair(c.report.max_relative_error, c.kink_margin);
      },
      py::arg("loss"), py::arg("k") = 4, py::arg("seed") = 0);

  // data
  m.def(
      "discretize_target",
      [](const std::vector<double>& raw, int k, const std::string& strategy) {
        const auto d = data::discretize_target(raw, k, data::parse_strategy(strategy));
        return std::make_pair(d.labels, d.edges);
      },
      py::arg("raw"), py::arg("k"), py::arg("strategy") = "equal_frequency");
  m.def(
      "stratified_kfold",
      [](const std::vector<int>& labels, int k, std::uint64_t seed) {
        return data::stratified_kfold(labels, k, seed).folds;
      },
      py::arg("labels"), py::arg("k") = 5, py::arg("seed") = 0);
  m.def("load_dataset", [](const std::string& id, const std::string& data_dir) {
    const auto ds = data::load_dataset(id, data_dir);
    py::dict d;
    d["numeric"] = ds.numeric;
    d["categorical"] = ds.categorical;
    d["labels"] = ds.labels;
    d["k"] = ds.k;
    d["provenance"] = ds.provenance;
    return d;
  });

  // experiments
  m.def(
      "cross_validate",
      [](const std::string& dataset, const std::string& method, const std::string& data_dir,
         int epochs, std::vector<std::uint64_t> seeds, std::optional<double> lambda) {
        auto c = bench::make_config(dataset, method);
        c.epochs = epochs;
        if (lambda) c.spec.lambda = *lambda;
        const auto ds = data::load_dataset(dataset, data_dir);
        const auto split = data::stratified_kfold(ds.labels, 5, c.fold_seed);
        bench::Summary s;
        {
          py::gil_scoped_release release;
          s = bench::cross_validate(c, ds, split, seeds);
        }
        py::dict d;
        d["mean"] = metrics_dict(s.mean);
        d["std"] = metrics_dict(s.stddev);
        py::list runs;
        for (const auto& r : s.runs) runs.append(metrics_dict(r));
        d["runs"] = runs;
        return d;
      },
      py::arg("dataset"), py::arg("method"), py::arg("data_dir") = "data", py::arg("epochs") = 1000,
      py::arg("seeds") = std::vector<std::uint64_t>{0}, py::arg("lambda_") = py::none());
}
