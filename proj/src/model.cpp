#include "unimodal/model.hpp"

#include <cmath>
#include <random>

#include "unimodal/distribution.hpp"

namespace unimodal::model {

using ordinal::HeadKind;

Model::Model(int inputs, int hidden, int k, ordinal::LossSpec spec, std::uint64_t seed)
    : inputs_(inputs), k_(k), spec_(spec), head_(ordinal::head_for(spec.kind)) {
  if (inputs < 1 || hidden < 1 || k < 2) {
    throw ContractViolation("model needs inputs >= 1, hidden >= 1, K >= 2");
  }
  std::mt19937_64 rng(seed);
  const int width = ordinal::head_width(head_, k);
  params_.add("W1", ad::glorot_uniform(inputs, hidden, rng));
  params_.add("b1", Matrix::Zero(1, hidden));
  params_.add("W2", ad::glorot_uniform(hidden, width, rng));
  params_.add("b2", Matrix::Zero(1, width));
  if (head_ == HeadKind::Poisson && !spec_.pu_tau) {
    // softplus(rho) = 1
    params_.add("rho", Matrix::Constant(1, 1, std::log(std::exp(1.0) - 1.0)));
  }
}

ordinal::HeadOutput Model::forward(ad::Tape& tape, std::span<const ad::Var> bound,
                                   const Matrix& x) const {
  if (x.cols() != inputs_) {
    throw ContractViolation("model expects " + std::to_string(inputs_) + " features, got " +
                            std::to_string(x.cols()));
  }
  const ad::Var h = ad::relu(ad::dense(tape.constant(x), bound[0], bound[1]));
  const ad::Var raw = ad::dense(h, bound[2], bound[3]);
  std::optional<ad::Var> tau;
  if (head_ == HeadKind::Poisson) {
    tau = spec_.pu_tau ? tape.constant(Matrix::Constant(1, 1, *spec_.pu_tau))
                       : ad::softplus(bound[4]);
  }
  return ordinal::apply_head(head_, raw, k_, spec_.un_nonneg, tau);
}

Matrix Model::predict_distributions(const Matrix& x) const {
  ad::Tape tape;
  const auto bound = params_.bind(tape);
  return ordinal::distributions(forward(tape, bound, x));
}

std::vector<int> Model::predict(const Matrix& x) const {
  ad::Tape tape;
  const auto bound = params_.bind(tape);
  return ordinal::predict_labels(forward(tape, bound, x));
}

LossGradCheck check_loss_gradient(const ordinal::LossSpec& spec, int k, std::uint64_t seed,
                                  int batch, int inputs, int hidden) {
  Model model(inputs, hidden, k, spec, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> label(1, k);
  // Nonzero biases so the check also exercises them.
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    Matrix v = model.params()[i].value;
    if (model.params()[i].name[0] == 'b') {
      for (Eigen::Index j = 0; j < v.size(); ++j) v.data()[j] = 0.3 * normal(rng);
      model.params().set(i, v);
    }
  }
  Matrix x(batch, inputs);
  for (Eigen::Index j = 0; j < x.size(); ++j) x.data()[j] = normal(rng);
  std::vector<int> labels(static_cast<std::size_t>(batch));
  for (int& l : labels) l = label(rng);

  Matrix targets;
  const Matrix* fixed = nullptr;
  LossGradCheck out;
  out.kink_margin = std::numeric_limits<double>::infinity();
  if (spec.kind == ordinal::LossKind::WU_KLDiv || spec.kind == ordinal::LossKind::WU_Wass) {
    const Matrix probs = model.predict_distributions(x);
    targets = ordinal::projection_targets(probs, labels,
                                          transport::CostMatrix::power(k, spec.cost_exponent));
    fixed = &targets;
    if (spec.kind == ordinal::LossKind::WU_Wass) {
      Matrix gap = probs - targets;
      for (Eigen::Index c = 1; c < gap.cols(); ++c) gap.col(c) += gap.col(c - 1);
      out.kink_margin = gap.leftCols(gap.cols() - 1).cwiseAbs().minCoeff();
    }
  }
  out.report = ad::finite_difference_check(
      [&](ad::Tape& tape, std::span<const ad::Var> bound) {
        return ordinal::loss(spec, model.forward(tape, bound, x), labels, fixed);
      },
      model.params());
  return out;
}

}  // namespace unimodal::model
