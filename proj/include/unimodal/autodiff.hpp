#pragma once

#include <deque>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Minimal reverse-mode automatic differentiation over dense matrices.
//
// Layout: one row per sample, one column per feature or class. A Tape records
// nodes in creation order, so walking it backwards is a valid reverse
// topological order.
namespace unimodal::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  /// Receives the adjoint of the node's output and adds into its parents.
  using Backward = std::function<void(const Matrix& out_grad, Tape& tape)>;

  Var leaf(Matrix value, bool requires_grad = true);
  Var constant(Matrix value) { return leaf(std::move(value), false); }
  Var record(Matrix value, std::vector<int> parents, Backward backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1. Adjoints
  /// accumulate: a second call without zero_grad() adds on top.
  void backward(Var loss);
  void zero_grad();

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad(int id) const;
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  /// Adds `g` into the adjoint of node `id` (no-op for constants).
  void accumulate(int id, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    // Intermediate adjoints are allocated on first use.
    mutable Matrix grad;
    std::vector<int> parents;
    Backward backward;
    bool requires_grad = false;
  };
  // Deque keeps value references stable while the tape grows.
  std::deque<Node> nodes_;
};

// Differentiable operations. Shape mismatches throw ContractViolation.

Var matmul(Var a, Var b);
/// x W + b with x: N x in, W: in x out, b: 1 x out.
Var dense(Var x, Var weights, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
/// Every entry of `a` times the 1x1 value of `s`.
Var scale_by(Var a, Var s);
Var add_scalar(Var a, double s);

/// relu'(0) is taken as 0.
Var relu(Var x);
Var softplus(Var x);
Var sigmoid(Var x);
Var exp(Var x);
/// log(max(x, floor)); the slope is 0 where the floor is active.
Var log(Var x, double floor = 0.0);
/// |x| with slope sign(x), taken as 0 inside |x| <= dead_zone.
Var abs(Var x, double dead_zone = 0.0);

/// Row-wise, max-subtracted.
Var softmax(Var x);
Var log_softmax(Var x);

/// Row-wise prefix sums: out_i = x_1 + ... + x_i.
Var cumsum_forward(Var x);
/// Row-wise suffix sums: out_i = x_i + ... + x_K.
Var cumsum_reverse(Var x);

/// Elementwise min; the adjoint goes to `a` on ties.
Var elementwise_min(Var a, Var b);

Var sum(Var x);
Var mean(Var x);
/// N x K -> N x 1.
Var row_sum(Var x);

/// Named tensors with immutable shapes.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Matrix value;
    bool trainable = true;
  };

  /// Throws ContractViolation if the name is taken.
  std::size_t add(std::string name, Matrix value, bool trainable = true);

  std::size_t size() const { return entries_.size(); }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  std::size_t index_of(const std::string& name) const;
  const Matrix& value(const std::string& name) const { return entries_[index_of(name)].value; }

  /// Replaces a value; the shape must not change.
  void set(std::size_t i, Matrix value);
  Matrix& mutable_value(std::size_t i) { return entries_[i].value; }

  /// Places every parameter on the tape as a leaf (constants if frozen).
  std::vector<Var> bind(Tape& tape) const;

  /// Adjoints of bound leaves, zero for frozen or unreached parameters.
  std::vector<Matrix> gradients(const std::vector<Var>& bound) const;

  std::size_t num_scalars() const;

 private:
  std::vector<Entry> entries_;
};

/// Glorot-uniform matrix in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng);

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

AdamState make_adam(const ParameterSet& params, double lr = 1e-4);

/// Bias-corrected Adam update of every trainable parameter.
void adam_step(ParameterSet& params, std::span<const Matrix> grads, AdamState& state);

/// Builds a scalar loss on `tape` from bound parameters.
using LossBuilder = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central differences against the tape gradient on every trainable scalar.
/// Relative error is |analytic - numeric| / max(1e-8, |numeric|).
GradCheckReport finite_difference_check(const LossBuilder& fn, const ParameterSet& params,
                                        double eps = 1e-5);

}  // namespace unimodal::ad
