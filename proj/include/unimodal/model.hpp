#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "unimodal/autodiff.hpp"
#include "unimodal/ordinal.hpp"

namespace unimodal::model {

using ad::Matrix;

/// One-hidden-layer ReLU perceptron followed by the head of `spec`.
///
/// Parameters, in order: W1, b1, W2, b2 and, for a Poisson head with a
/// learnable temperature, rho with tau = softplus(rho).
class Model {
 public:
  Model(int inputs, int hidden, int k, ordinal::LossSpec spec, std::uint64_t seed);

  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }
  const ordinal::LossSpec& spec() const { return spec_; }
  ordinal::HeadKind head() const { return head_; }
  int k() const { return k_; }
  int inputs() const { return inputs_; }

  ordinal::HeadOutput forward(ad::Tape& tape, std::span<const ad::Var> bound,
                              const Matrix& x) const;

  /// Class distributions and 1-based labels for each row of x.
  Matrix predict_distributions(const Matrix& x) const;
  std::vector<int> predict(const Matrix& x) const;

 private:
  int inputs_;
  int k_;
  ordinal::LossSpec spec_;
  ordinal::HeadKind head_;
  ad::ParameterSet params_;
};

struct LossGradCheck {
  ad::GradCheckReport report;
  /// Distance of the base point from the loss's known kink set; infinite
  /// when the loss has none to report. For WU-Wass this is the smallest
  /// |CDF gap| between a prediction and its target, zero when any prediction
  /// already lies on the unimodal set.
  double kink_margin = 0.0;
};

/// Finite-difference check of the full loss of `spec` through a small random
/// model on a random batch. WU targets are computed once at the base point and
/// held fixed, matching the detached projection used in training.
LossGradCheck check_loss_gradient(const ordinal::LossSpec& spec, int k, std::uint64_t seed,
                                  int batch = 6, int inputs = 3, int hidden = 5);

}  // namespace unimodal::model
