#include "unimodal/ordinal.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "unimodal/simplex.hpp"

namespace unimodal::ordinal {

namespace {

const std::vector<std::pair<std::string, LossKind>>& registry() {
  static const std::vector<std::pair<std::string, LossKind>> table = {
      {"ce", LossKind::CE},
      {"oe", LossKind::OE},
      {"cdw-ce", LossKind::CDW_CE},
      {"bu", LossKind::BU},
      {"pu", LossKind::PU},
      {"un", LossKind::UN},
      {"wu-kldiv", LossKind::WU_KLDiv},
      {"wu-wass", LossKind::WU_Wass},
      {"co2", LossKind::CO2},
      {"co", LossKind::CO},
      {"uu", LossKind::UU},
  };
  return table;
}

void check_labels(std::span<const int> labels, Eigen::Index rows, int k) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw ContractViolation("labels: expected " + std::to_string(rows) + " entries, got " +
                            std::to_string(labels.size()));
  }
  for (int l : labels) {
    if (l < 1 || l > k) throw ContractViolation("label out of range: " + std::to_string(l));
  }
}

Matrix one_hot_rows(std::span<const int> labels, int k) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
  for (std::size_t n = 0; n < labels.size(); ++n) m(static_cast<Eigen::Index>(n), labels[n] - 1) = 1.0;
  return m;
}

Matrix class_row(int k, double (*f)(int, int)) {
  Matrix row(1, k);
  for (int c = 1; c <= k; ++c) row(0, c - 1) = f(c, k);
  return row;
}

Var batch_mean(Var total, Eigen::Index n) { return ad::scale(total, 1.0 / static_cast<double>(n)); }

// Shared body of the u and uu penalties over the ordered pairs (i, j), i < j.
// A pair left of the mode wants p_i <= p_j, right of it p_i >= p_j; pairs
// straddling the mode carry no order relation.
Var pair_penalty(Var probs, std::span<const int> labels, double delta, bool consecutive_only) {
  const int k = static_cast<int>(probs.cols());
  const Eigen::Index n = probs.rows();
  check_labels(labels, n, k);
  if (delta < 0) throw ContractViolation("delta must be >= 0");
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if (!consecutive_only || j == i + 1) pairs.emplace_back(i, j);
    }
  }
  const auto p = static_cast<Eigen::Index>(pairs.size());
  Tape& tape = *probs.tape();
  if (p == 0) return tape.constant(Matrix::Zero(1, 1));
  Matrix diff = Matrix::Zero(k, p);
  Matrix sign = Matrix::Zero(n, p);
  Matrix mask = Matrix::Zero(n, p);
  for (Eigen::Index c = 0; c < p; ++c) {
    const auto [i, j] = pairs[static_cast<std::size_t>(c)];
    diff(i, c) = 1.0;
    diff(j, c) = -1.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const int mode = labels[static_cast<std::size_t>(r)] - 1;
      if (j <= mode) {
        sign(r, c) = 1.0;
        mask(r, c) = 1.0;
      } else if (i >= mode) {
        sign(r, c) = -1.0;
        mask(r, c) = 1.0;
      }
    }
  }
  const Var d = ad::matmul(probs, tape.constant(std::move(diff)));
  const Var hinge = ad::relu(ad::add_scalar(ad::mul(d, tape.constant(std::move(sign))), delta));
  return batch_mean(ad::sum(ad::mul(hinge, tape.constant(std::move(mask)))), n);
}

bool is_linear_cost(const transport::CostMatrix& cost) {
  return cost.entries() == transport::CostMatrix::power(cost.size(), 1.0).entries();
}

// Rows that coincide with their target sit on the unimodal set; they add an
// exact zero to the penalties.
Matrix active_rows(const Matrix& probs, const Matrix& targets) {
  Matrix active(probs.rows(), 1);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    active(r, 0) = probs.row(r) == targets.row(r) ? 0.0 : 1.0;
  }
  return active;
}

Distribution row_distribution(const Matrix& m, Eigen::Index r) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(c)] = m(r, c);
  return Distribution::normalized(std::move(v));
}

// Single-sample view of a given distribution as a head output.
HeadOutput constant_output(Tape& tape, const Distribution& p) {
  const int k = static_cast<int>(p.size());
  Matrix row(1, k);
  for (int c = 0; c < k; ++c) row(0, c) = p[static_cast<std::size_t>(c)];
  HeadOutput out;
  out.kind = HeadKind::Softmax;
  out.k = k;
  out.probs = tape.constant(row);
  out.log_probs = tape.constant(row.unaryExpr([](double v) { return std::log(std::max(v, kLogClamp)); }));
  out.scores = out.log_probs;
  return out;
}

double scalar(Var v) { return v.value()(0, 0); }

}  // namespace

LossKind parse_loss(const std::string& name) {
  for (const auto& [key, kind] : registry()) {
    if (key == name) return kind;
  }
  throw ContractViolation("unknown loss: " + name);
}

std::string to_string(LossKind kind) {
  for (const auto& [key, k] : registry()) {
    if (k == kind) return key;
  }
  return "?";
}

const std::vector<std::string>& registered_losses() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : registry()) out.push_back(entry.first);
    return out;
  }();
  return names;
}

LossSpec default_spec(LossKind kind) {
  LossSpec spec;
  spec.kind = kind;
  if (kind == LossKind::CO) spec.delta = 0.0;
  return spec;
}

HeadKind head_for(LossKind kind) {
  switch (kind) {
    case LossKind::UN: return HeadKind::Unimodal;
    case LossKind::BU: return HeadKind::Binomial;
    case LossKind::PU: return HeadKind::Poisson;
    case LossKind::OE: return HeadKind::OrdinalEncoding;
    default: return HeadKind::Softmax;
  }
}

int head_width(HeadKind head, int k) {
  switch (head) {
    case HeadKind::Binomial:
    case HeadKind::Poisson: return 1;
    case HeadKind::OrdinalEncoding: return k - 1;
    default: return k;
  }
}

bool has_penalty(LossKind kind) {
  switch (kind) {
    case LossKind::WU_KLDiv:
    case LossKind::WU_Wass:
    case LossKind::CO2:
    case LossKind::CO:
    case LossKind::UU: return true;
    default: return false;
  }
}

HeadOutput apply_head(HeadKind head, Var raw, int k, Nonneg nonneg, std::optional<Var> tau) {
  if (k < 2) throw ContractViolation("heads need K >= 2");
  if (raw.cols() != head_width(head, k)) {
    throw ContractViolation("head expects " + std::to_string(head_width(head, k)) +
                            " raw outputs, got " + std::to_string(raw.cols()));
  }
  Tape& tape = *raw.tape();
  HeadOutput out;
  out.kind = head;
  out.k = k;
  switch (head) {
    case HeadKind::Softmax:
      out.scores = raw;
      break;
    case HeadKind::Unimodal: {
      const Var zz = nonneg == Nonneg::Relu ? ad::relu(raw) : ad::softplus(raw);
      out.scores = ad::elementwise_min(ad::cumsum_forward(zz), ad::cumsum_reverse(zz));
      break;
    }
    case HeadKind::Binomial: {
      // log p = -softplus(-l), log(1 - p) = -softplus(l).
      const Var log_p = ad::scale(ad::softplus(ad::scale(raw, -1.0)), -1.0);
      const Var log_q = ad::scale(ad::softplus(raw), -1.0);
      const Matrix successes = class_row(k, [](int c, int) { return c - 1.0; });
      const Matrix failures = class_row(k, [](int c, int kk) { return static_cast<double>(kk - c); });
      const Matrix log_choose = class_row(k, [](int c, int kk) {
        return std::lgamma(kk) - std::lgamma(c) - std::lgamma(kk - c + 1.0);
      });
      const Var s = ad::add(ad::matmul(log_p, tape.constant(successes)),
                            ad::matmul(log_q, tape.constant(failures)));
      out.scores = ad::add(s, tape.constant(log_choose.replicate(raw.rows(), 1)));
      break;
    }
    case HeadKind::Poisson: {
      const Var rate = ad::add_scalar(ad::softplus(raw), kPoissonRateFloor);
      const Matrix counts = class_row(k, [](int c, int) { return static_cast<double>(c); });
      const Matrix log_fact = class_row(k, [](int c, int) { return std::lgamma(c + 1.0); });
      const Var log_pmf =
          ad::sub(ad::sub(ad::matmul(ad::log(rate), tape.constant(counts)),
                          ad::matmul(rate, tape.constant(Matrix::Ones(1, k)))),
                  tape.constant(log_fact.replicate(raw.rows(), 1)));
      out.scores = tau ? ad::scale_by(log_pmf, *tau) : log_pmf;
      break;
    }
    case HeadKind::OrdinalEncoding:
      out.logits = raw;
      return out;
  }
  out.probs = ad::softmax(out.scores);
  out.log_probs = ad::log_softmax(out.scores);
  return out;
}

Matrix oe_cumulative(const HeadOutput& out) {
  if (out.kind != HeadKind::OrdinalEncoding) throw ContractViolation("not an OE head output");
  return out.logits.value().unaryExpr([](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Matrix oe_distribution(const Matrix& cumulative) {
  const Eigen::Index n = cumulative.rows(), t = cumulative.cols();
  Matrix dist(n, t + 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c <= t; ++c) {
      const double upper = c == 0 ? 1.0 : cumulative(r, c - 1);
      const double lower = c == t ? 0.0 : cumulative(r, c);
      dist(r, c) = std::max(0.0, upper - lower);
    }
    const double total = dist.row(r).sum();
    if (total > 0) {
      dist.row(r) /= total;
    } else {
      dist.row(r).setConstant(1.0 / static_cast<double>(t + 1));
    }
  }
  return dist;
}

Matrix distributions(const HeadOutput& out) {
  if (out.kind == HeadKind::OrdinalEncoding) return oe_distribution(oe_cumulative(out));
  return out.probs.value();
}

std::vector<int> predict_labels(const HeadOutput& out) {
  std::vector<int> labels;
  if (out.kind == HeadKind::OrdinalEncoding) {
    const Matrix c = oe_cumulative(out);
    for (Eigen::Index r = 0; r < c.rows(); ++r) {
      labels.push_back(1 + static_cast<int>((c.row(r).array() > 0.5).count()));
    }
    return labels;
  }
  const Matrix& p = out.probs.value();
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < p.cols(); ++c) {
      if (p(r, c) > p(r, best)) best = c;
    }
    labels.push_back(static_cast<int>(best) + 1);
  }
  return labels;
}

Var ce_loss(const HeadOutput& out, std::span<const int> labels) {
  const Eigen::Index n = out.log_probs.rows();
  check_labels(labels, n, out.k);
  Tape& tape = *out.log_probs.tape();
  const Var picked = ad::sum(ad::mul(out.log_probs, tape.constant(one_hot_rows(labels, out.k))));
  return batch_mean(ad::scale(picked, -1.0), n);
}

Var oe_loss(const HeadOutput& out, std::span<const int> labels) {
  if (out.kind != HeadKind::OrdinalEncoding) throw ContractViolation("oe_loss needs an OE head");
  const Eigen::Index n = out.logits.rows();
  check_labels(labels, n, out.k);
  Matrix targets = Matrix::Zero(n, out.k - 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int c = 1; c < out.k; ++c) targets(r, c - 1) = labels[static_cast<std::size_t>(r)] > c ? 1.0 : 0.0;
  }
  Tape& tape = *out.logits.tape();
  // BCE with logits: softplus(z) - t z.
  const Var bce = ad::sub(ad::softplus(out.logits), ad::mul(out.logits, tape.constant(targets)));
  return batch_mean(ad::sum(bce), n);
}

Var cdw_ce_loss(const HeadOutput& out, std::span<const int> labels, double alpha) {
  if (alpha <= 0) throw ContractViolation("CDW-CE alpha must be > 0");
  const Eigen::Index n = out.probs.rows();
  check_labels(labels, n, out.k);
  Matrix weights(n, out.k);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int c = 0; c < out.k; ++c) {
      weights(r, c) = std::pow(std::abs(c + 1 - labels[static_cast<std::size_t>(r)]), alpha);
    }
  }
  Tape& tape = *out.probs.tape();
  const Var log_rest = ad::log(ad::add_scalar(ad::scale(out.probs, -1.0), 1.0), kLogClamp);
  return batch_mean(ad::scale(ad::sum(ad::mul(log_rest, tape.constant(weights))), -1.0), n);
}

Var u_term(Var probs, std::span<const int> labels, double delta) {
  return pair_penalty(probs, labels, delta, true);
}

Var uu_term(Var probs, std::span<const int> labels, double delta) {
  return pair_penalty(probs, labels, delta, false);
}

Matrix projection_targets(const Matrix& probs, std::span<const int> labels,
                          const transport::CostMatrix& cost) {
  const int k = static_cast<int>(probs.cols());
  check_labels(labels, probs.rows(), k);
  if (cost.size() != k) throw ContractViolation("cost matrix size differs from K");
  Matrix targets(probs.rows(), k);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const ModeIndex mode(labels[static_cast<std::size_t>(r)]);
    std::vector<double> row(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) row[static_cast<std::size_t>(c)] = probs(r, c);
    if (simplex::is_unimodal_with_mode(std::span<const double>(row), mode.value)) {
      targets.row(r) = probs.row(r);
      continue;
    }
    const auto proj = transport::project_unimodal(row_distribution(probs, r), mode, cost);
    for (int c = 0; c < k; ++c) targets(r, c) = proj.projection[static_cast<std::size_t>(c)];
  }
  return targets;
}

Var kl_penalty(const HeadOutput& out, const Matrix& targets) {
  const Matrix& p = out.probs.value();
  if (targets.rows() != p.rows() || targets.cols() != p.cols()) {
    throw ContractViolation("kl_penalty: target shape mismatch");
  }
  const Matrix active = active_rows(p, targets);
  Matrix weights = targets;
  double entropy_part = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    if (active(r, 0) == 0.0) {
      weights.row(r).setZero();
      continue;
    }
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double t = targets(r, c);
      if (t > 0) entropy_part += t * std::log(t);
    }
  }
  Tape& tape = *out.probs.tape();
  // sum t log t - sum t log p, with t constant.
  const Var cross = ad::sum(ad::mul(out.log_probs, tape.constant(std::move(weights))));
  return batch_mean(ad::add_scalar(ad::scale(cross, -1.0), entropy_part), p.rows());
}

Var wasserstein_penalty(Var probs, const Matrix& targets, const transport::CostMatrix& cost) {
  const Matrix& p = probs.value();
  if (targets.rows() != p.rows() || targets.cols() != p.cols()) {
    throw ContractViolation("wasserstein_penalty: target shape mismatch");
  }
  if (cost.size() != p.cols()) throw ContractViolation("cost matrix size differs from K");
  Tape& tape = *probs.tape();
  const Matrix active = active_rows(p, targets);
  const Eigen::Index n = p.rows();
  if (is_linear_cost(cost)) {
    const Var cdf_gap = ad::cumsum_forward(ad::sub(probs, tape.constant(targets)));
    const Var gaps = ad::mul(ad::abs(cdf_gap, 1e-10), tape.constant(active.replicate(1, p.cols())));
    return batch_mean(ad::sum(gaps), n);
  }
  Matrix potentials = Matrix::Zero(n, p.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    if (active(r, 0) == 0.0) continue;
    const auto w = transport::wasserstein_distance(row_distribution(targets, r),
                                                   row_distribution(p, r), cost);
    total += w.value;
    potentials.row(r) = w.beta.transpose();
  }
  const int ip = probs.id();
  return tape.record(Matrix::Constant(1, 1, total / static_cast<double>(n)), {ip},
                     [ip, potentials, n](const Matrix& g, Tape& t) {
                       t.accumulate(ip, potentials * (g(0, 0) / static_cast<double>(n)));
                     });
}

Var loss(const LossSpec& spec, const HeadOutput& out, std::span<const int> labels,
         const Matrix* wu_targets) {
  if (spec.lambda < 0) throw ContractViolation("lambda must be >= 0");
  switch (spec.kind) {
    case LossKind::OE: return oe_loss(out, labels);
    case LossKind::CDW_CE: return cdw_ce_loss(out, labels, spec.cdw_alpha);
    case LossKind::CE:
    case LossKind::BU:
    case LossKind::PU:
    case LossKind::UN: return ce_loss(out, labels);
    default: break;
  }
  const Var ce = ce_loss(out, labels);
  Var penalty;
  switch (spec.kind) {
    case LossKind::CO2: penalty = u_term(out.probs, labels, spec.delta); break;
    case LossKind::CO: penalty = u_term(out.probs, labels, 0.0); break;
    case LossKind::UU: penalty = uu_term(out.probs, labels, spec.delta); break;
    case LossKind::WU_KLDiv:
    case LossKind::WU_Wass: {
      const auto cost = transport::CostMatrix::power(out.k, spec.cost_exponent);
      const Matrix targets =
          wu_targets ? *wu_targets : projection_targets(out.probs.value(), labels, cost);
      penalty = spec.kind == LossKind::WU_KLDiv ? kl_penalty(out, targets)
                                                : wasserstein_penalty(out.probs, targets, cost);
      break;
    }
    default: throw ContractViolation("unhandled loss kind");
  }
  return ad::add(ce, ad::scale(penalty, spec.lambda));
}

Distribution unimodal_net_head(std::span<const double> z, Nonneg nonneg) {
  Tape tape;
  const Var raw = tape.constant(Eigen::Map<const Eigen::RowVectorXd>(z.data(), static_cast<Eigen::Index>(z.size())));
  const auto out = apply_head(HeadKind::Unimodal, raw, static_cast<int>(z.size()), nonneg);
  const Matrix& p = out.probs.value();
  return Distribution(std::vector<double>(p.data(), p.data() + p.size()));
}

Distribution binomial_head(double logit, int k) {
  Tape tape;
  const auto out = apply_head(HeadKind::Binomial, tape.constant(Matrix::Constant(1, 1, logit)), k);
  const Matrix& p = out.probs.value();
  return Distribution(std::vector<double>(p.data(), p.data() + p.size()));
}

Distribution poisson_head(double raw, int k, double tau) {
  if (!(tau > 0)) throw ContractViolation("Poisson temperature must be > 0");
  Tape tape;
  const auto out = apply_head(HeadKind::Poisson, tape.constant(Matrix::Constant(1, 1, raw)), k,
                              Nonneg::Softplus, tape.constant(Matrix::Constant(1, 1, tau)));
  const Matrix& p = out.probs.value();
  return Distribution(std::vector<double>(p.data(), p.data() + p.size()));
}

ModeIndex predict_label_oe(std::span<const double> cumulative) {
  return ModeIndex(1 + static_cast<int>(std::count_if(cumulative.begin(), cumulative.end(),
                                                      [](double c) { return c > 0.5; })));
}

OeOutput ordinal_encoding_head(std::span<const double> z) {
  if (z.empty()) throw ContractViolation("OE head needs K - 1 >= 1 logits");
  Tape tape;
  HeadOutput out = apply_head(HeadKind::OrdinalEncoding,
                              tape.constant(Eigen::Map<const Eigen::RowVectorXd>(
                                  z.data(), static_cast<Eigen::Index>(z.size()))),
                              static_cast<int>(z.size()) + 1);
  const Matrix c = oe_cumulative(out);
  const Matrix d = oe_distribution(c);
  std::vector<double> cumulative(c.data(), c.data() + c.size());
  const ModeIndex label = predict_label_oe(cumulative);
  return {std::move(cumulative), Distribution(std::vector<double>(d.data(), d.data() + d.size())),
          label};
}

ModeIndex predict_label(const Distribution& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return ModeIndex(static_cast<int>(best) + 1);
}

double ce_loss(ModeIndex k_star, const Distribution& p) {
  check_mode(k_star, p.size());
  return -std::log(std::max(p.at(k_star), kLogClamp));
}

double u_term(double delta, ModeIndex k_star, const Distribution& p) {
  check_mode(k_star, p.size());
  Tape tape;
  const int label = k_star.value;
  return scalar(u_term(constant_output(tape, p).probs, std::span<const int>(&label, 1), delta));
}

double uu_term(double delta, ModeIndex k_star, const Distribution& p) {
  check_mode(k_star, p.size());
  Tape tape;
  const int label = k_star.value;
  return scalar(uu_term(constant_output(tape, p).probs, std::span<const int>(&label, 1), delta));
}

double co2_loss(double delta, double lambda, ModeIndex k_star, const Distribution& p) {
  if (lambda < 0) throw ContractViolation("lambda must be >= 0");
  return ce_loss(k_star, p) + lambda * u_term(delta, k_star, p);
}

double cdw_ce_loss(ModeIndex k_star, const Distribution& p, double alpha) {
  check_mode(k_star, p.size());
  Tape tape;
  const int label = k_star.value;
  return scalar(cdw_ce_loss(constant_output(tape, p), std::span<const int>(&label, 1), alpha));
}

WuValue wu_loss(ModeIndex k_star, const Distribution& p, double lambda, D2 d2,
                const transport::CostMatrix& cost) {
  check_mode(k_star, p.size());
  if (lambda < 0) throw ContractViolation("lambda must be >= 0");
  Tape tape;
  const HeadOutput out = constant_output(tape, p);
  const int label = k_star.value;
  const std::span<const int> labels(&label, 1);
  const Matrix targets = projection_targets(out.probs.value(), labels, cost);
  const Var penalty = d2 == D2::KLDiv ? kl_penalty(out, targets)
                                      : wasserstein_penalty(out.probs, targets, cost);
  WuValue v{ce_loss(k_star, p), scalar(penalty), 0.0,
            Distribution::normalized(std::vector<double>(targets.data(), targets.data() + targets.size()))};
  v.total = v.ce + lambda * v.penalty;
  return v;
}

}  // namespace unimodal::ordinal
