#include "unimodal/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "unimodal/distribution.hpp"

namespace unimodal::ad {

namespace {

void require_same_tape(Var a, Var b, const char* op) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw ContractViolation(std::string(op) + ": operands live on different tapes");
  }
}

void require_same_shape(Var a, Var b, const char* op) {
  require_same_tape(a, b, op);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractViolation(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                            "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                            "x" + std::to_string(b.cols()));
  }
}

Matrix stable_sigmoid(const Matrix& x) {
  return x.unaryExpr([](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Matrix row_log_sum_exp(const Matrix& x) {
  const Eigen::VectorXd mx = x.rowwise().maxCoeff();
  const Eigen::VectorXd s = (x.colwise() - mx).array().exp().rowwise().sum().log().matrix();
  return mx + s;
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::leaf(Matrix value, bool requires_grad) {
  Node node;
  node.grad = Matrix::Zero(value.rows(), value.cols());
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Matrix value, std::vector<int> parents, Backward backward) {
  Node node;
  node.requires_grad = std::any_of(parents.begin(), parents.end(),
                                   [&](int p) { return requires_grad(p); });
  node.value = std::move(value);
  node.parents = std::move(parents);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::accumulate(int id, const Matrix& g) {
  auto& node = nodes_[static_cast<std::size_t>(id)];
  if (!node.requires_grad) return;
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

const Matrix& Tape::grad(int id) const {
  const auto& node = nodes_[static_cast<std::size_t>(id)];
  if (node.grad.rows() != node.value.rows() || node.grad.cols() != node.value.cols()) {
    node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractViolation("backward: loss is not on this tape");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractViolation("backward: loss must be a scalar, got " + std::to_string(loss.rows()) +
                            "x" + std::to_string(loss.cols()));
  }
  // Adjoints of intermediate nodes are rebuilt from scratch each pass; leaf
  // adjoints keep accumulating.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].backward) nodes_[i].grad.resize(0, 0);
  }
  accumulate(loss.id(), Matrix::Ones(1, 1));
  for (int i = loss.id(); i >= 0; --i) {
    auto& node = nodes_[static_cast<std::size_t>(i)];
    // An unreached node has a zero adjoint and contributes nothing.
    if (!node.backward || node.grad.size() == 0) continue;
    node.backward(node.grad, *this);
  }
}

void Tape::zero_grad() {
  for (auto& node : nodes_) node.grad.setZero();
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) throw ContractViolation("matmul: inner dimensions differ");
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() * b.value(), {ia, ib}, [ia, ib](const Matrix& g, Tape& t) {
    t.accumulate(ia, g * t.value(ib).transpose());
    t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var dense(Var x, Var weights, Var bias) {
  require_same_tape(x, weights, "dense");
  require_same_tape(x, bias, "dense");
  if (x.cols() != weights.rows() || bias.rows() != 1 || bias.cols() != weights.cols()) {
    throw ContractViolation("dense: expected x (N x in), W (in x out), b (1 x out)");
  }
  const int ix = x.id(), iw = weights.id(), ib = bias.id();
  Matrix out = x.value() * weights.value();
  out.rowwise() += bias.value().row(0);
  return x.tape()->record(std::move(out), {ix, iw, ib}, [ix, iw, ib](const Matrix& g, Tape& t) {
    t.accumulate(ix, g * t.value(iw).transpose());
    t.accumulate(iw, t.value(ix).transpose() * g);
    t.accumulate(ib, g.colwise().sum());
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() + b.value(), {ia, ib}, [ia, ib](const Matrix& g, Tape& t) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() - b.value(), {ia, ib}, [ia, ib](const Matrix& g, Tape& t) {
    t.accumulate(ia, g);
    t.accumulate(ib, -g);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value().cwiseProduct(b.value()), {ia, ib},
                          [ia, ib](const Matrix& g, Tape& t) {
                            t.accumulate(ia, g.cwiseProduct(t.value(ib)));
                            t.accumulate(ib, g.cwiseProduct(t.value(ia)));
                          });
}

Var scale(Var a, double s) {
  const int ia = a.id();
  return a.tape()->record(a.value() * s, {ia},
                          [ia, s](const Matrix& g, Tape& t) { t.accumulate(ia, g * s); });
}

Var scale_by(Var a, Var s) {
  require_same_tape(a, s, "scale_by");
  if (s.rows() != 1 || s.cols() != 1) throw ContractViolation("scale_by: factor must be 1x1");
  const int ia = a.id(), is = s.id();
  return a.tape()->record(a.value() * s.value()(0, 0), {ia, is},
                          [ia, is](const Matrix& g, Tape& t) {
                            t.accumulate(ia, g * t.value(is)(0, 0));
                            t.accumulate(is, Matrix::Constant(1, 1, g.cwiseProduct(t.value(ia)).sum()));
                          });
}

Var add_scalar(Var a, double s) {
  const int ia = a.id();
  return a.tape()->record(a.value().array() + s, {ia},
                          [ia](const Matrix& g, Tape& t) { t.accumulate(ia, g); });
}

Var relu(Var x) {
  const int ix = x.id();
  return x.tape()->record(x.value().cwiseMax(0.0), {ix}, [ix](const Matrix& g, Tape& t) {
    t.accumulate(ix, g.cwiseProduct(
                         t.value(ix).unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; })));
  });
}

Var softplus(Var x) {
  const int ix = x.id();
  Matrix out = x.value().unaryExpr(
      [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); });
  return x.tape()->record(std::move(out), {ix}, [ix](const Matrix& g, Tape& t) {
    t.accumulate(ix, g.cwiseProduct(stable_sigmoid(t.value(ix))));
  });
}

Var sigmoid(Var x) {
  const int ix = x.id();
  Matrix s = stable_sigmoid(x.value());
  return x.tape()->record(s, {ix}, [ix, s](const Matrix& g, Tape& t) {
    t.accumulate(ix, g.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
  });
}

Var exp(Var x) {
  const int ix = x.id();
  return x.tape()->record(x.value().array().exp().matrix(), {ix}, [ix](const Matrix& g, Tape& t) {
    t.accumulate(ix, g.cwiseProduct(t.value(ix).array().exp().matrix()));
  });
}

Var log(Var x, double floor) {
  const int ix = x.id();
  Matrix out = x.value().unaryExpr([floor](double v) { return std::log(std::max(v, floor)); });
  return x.tape()->record(std::move(out), {ix}, [ix, floor](const Matrix& g, Tape& t) {
    t.accumulate(ix, g.cwiseProduct(t.value(ix).unaryExpr(
                         [floor](double v) { return v > floor ? 1.0 / v : 0.0; })));
  });
}

Var abs(Var x, double dead_zone) {
  const int ix = x.id();
  return x.tape()->record(x.value().cwiseAbs(), {ix}, [ix, dead_zone](const Matrix& g, Tape& t) {
    t.accumulate(ix, g.cwiseProduct(t.value(ix).unaryExpr([dead_zone](double v) {
      return std::abs(v) <= dead_zone ? 0.0 : (v > 0 ? 1.0 : -1.0);
    })));
  });
}

Var softmax(Var x) {
  const int ix = x.id();
  const Matrix lse = row_log_sum_exp(x.value());
  Matrix s = (x.value().colwise() - lse.col(0)).array().exp().matrix();
  return x.tape()->record(s, {ix}, [ix, s](const Matrix& g, Tape& t) {
    const Eigen::VectorXd dot = g.cwiseProduct(s).rowwise().sum();
    t.accumulate(ix, s.cwiseProduct(g.colwise() - dot));
  });
}

Var log_softmax(Var x) {
  const int ix = x.id();
  const Matrix lse = row_log_sum_exp(x.value());
  Matrix out = x.value().colwise() - lse.col(0);
  Matrix s = out.array().exp().matrix();
  return x.tape()->record(std::move(out), {ix}, [ix, s](const Matrix& g, Tape& t) {
    const Eigen::VectorXd total = g.rowwise().sum();
    t.accumulate(ix, g - s.cwiseProduct(total.replicate(1, s.cols())));
  });
}

namespace {

Matrix prefix_sums(const Matrix& x) {
  Matrix out = x;
  for (Eigen::Index j = 1; j < out.cols(); ++j) out.col(j) += out.col(j - 1);
  return out;
}

Matrix suffix_sums(const Matrix& x) {
  Matrix out = x;
  for (Eigen::Index j = out.cols() - 2; j >= 0; --j) out.col(j) += out.col(j + 1);
  return out;
}

}  // namespace

Var cumsum_forward(Var x) {
  const int ix = x.id();
  return x.tape()->record(prefix_sums(x.value()), {ix},
                          [ix](const Matrix& g, Tape& t) { t.accumulate(ix, suffix_sums(g)); });
}

Var cumsum_reverse(Var x) {
  const int ix = x.id();
  return x.tape()->record(suffix_sums(x.value()), {ix},
                          [ix](const Matrix& g, Tape& t) { t.accumulate(ix, prefix_sums(g)); });
}

Var elementwise_min(Var a, Var b) {
  require_same_shape(a, b, "elementwise_min");
  const int ia = a.id(), ib = b.id();
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> take_a =
      (a.value().array() <= b.value().array());
  return a.tape()->record(a.value().cwiseMin(b.value()), {ia, ib},
                          [ia, ib, take_a](const Matrix& g, Tape& t) {
                            t.accumulate(ia, take_a.select(g, 0.0).matrix());
                            t.accumulate(ib, take_a.select(0.0, g).matrix());
                          });
}

Var sum(Var x) {
  const int ix = x.id();
  const Eigen::Index r = x.rows(), c = x.cols();
  return x.tape()->record(Matrix::Constant(1, 1, x.value().sum()), {ix},
                          [ix, r, c](const Matrix& g, Tape& t) {
                            t.accumulate(ix, Matrix::Constant(r, c, g(0, 0)));
                          });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  if (n == 0) throw ContractViolation("mean: empty input");
  return scale(sum(x), 1.0 / n);
}

Var row_sum(Var x) {
  const int ix = x.id();
  const Eigen::Index c = x.cols();
  return x.tape()->record(x.value().rowwise().sum(), {ix}, [ix, c](const Matrix& g, Tape& t) {
    t.accumulate(ix, g.replicate(1, c));
  });
}

std::size_t ParameterSet::add(std::string name, Matrix value, bool trainable) {
  for (const auto& e : entries_) {
    if (e.name == name) throw ContractViolation("parameter already exists: " + name);
  }
  entries_.push_back({std::move(name), std::move(value), trainable});
  return entries_.size() - 1;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  throw ContractViolation("unknown parameter: " + name);
}

void ParameterSet::set(std::size_t i, Matrix value) {
  auto& e = entries_.at(i);
  if (value.rows() != e.value.rows() || value.cols() != e.value.cols()) {
    throw ContractViolation("parameter shape is fixed: " + e.name);
  }
  e.value = std::move(value);
}

std::vector<Var> ParameterSet::bind(Tape& tape) const {
  std::vector<Var> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(tape.leaf(e.value, e.trainable));
  return out;
}

std::vector<Matrix> ParameterSet::gradients(const std::vector<Var>& bound) const {
  if (bound.size() != entries_.size()) throw ContractViolation("gradients: binding size mismatch");
  std::vector<Matrix> out;
  out.reserve(bound.size());
  for (std::size_t i = 0; i < bound.size(); ++i) {
    if (entries_[i].trainable) {
      out.push_back(bound[i].grad());
    } else {
      out.push_back(Matrix::Zero(entries_[i].value.rows(), entries_[i].value.cols()));
    }
  }
  return out;
}

std::size_t ParameterSet::num_scalars() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(fan_in, fan_out);
  for (Eigen::Index j = 0; j < fan_out; ++j) {
    for (Eigen::Index i = 0; i < fan_in; ++i) w(i, j) = dist(rng);
  }
  return w;
}

AdamState make_adam(const ParameterSet& params, double lr) {
  AdamState s;
  s.lr = lr;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& v = params[i].value;
    s.m.push_back(Matrix::Zero(v.rows(), v.cols()));
    s.v.push_back(Matrix::Zero(v.rows(), v.cols()));
  }
  return s;
}

void adam_step(ParameterSet& params, std::span<const Matrix> grads, AdamState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw ContractViolation("adam_step: parameter/gradient count mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    const Matrix& g = grads[i];
    if (g.rows() != params[i].value.rows() || g.cols() != params[i].value.cols()) {
      throw ContractViolation("adam_step: gradient shape mismatch for " + params[i].name);
    }
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.cwiseProduct(g);
    const Matrix m_hat = state.m[i] / c1;
    const Matrix v_hat = state.v[i] / c2;
    params.mutable_value(i).array() -=
        state.lr * m_hat.array() / (v_hat.array().sqrt() + state.eps);
  }
}

GradCheckReport finite_difference_check(const LossBuilder& fn, const ParameterSet& params,
                                        double eps) {
  auto evaluate = [&](const ParameterSet& ps) {
    Tape tape;
    const auto bound = ps.bind(tape);
    return fn(tape, bound).value()(0, 0);
  };

  Tape tape;
  const auto bound = params.bind(tape);
  tape.backward(fn(tape, bound));
  const auto analytic = params.gradients(bound);

  GradCheckReport report;
  ParameterSet probe = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!params[p].trainable) continue;
    const Matrix& base = params[p].value;
    for (Eigen::Index j = 0; j < base.cols(); ++j) {
      for (Eigen::Index i = 0; i < base.rows(); ++i) {
        Matrix plus = base, minus = base;
        plus(i, j) += eps;
        minus(i, j) -= eps;
        probe.set(p, plus);
        const double fp = evaluate(probe);
        probe.set(p, minus);
        const double fm = evaluate(probe);
        probe.set(p, base);
        const double numeric = (fp - fm) / (2.0 * eps);
        const double a = analytic[p](i, j);
        const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(numeric));
        if (rel > report.max_relative_error) {
          report = {rel, p, i, j, a, numeric};
        }
      }
    }
  }
  return report;
}

}  // namespace unimodal::ad
