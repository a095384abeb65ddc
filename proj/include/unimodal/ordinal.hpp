#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unimodal/autodiff.hpp"
#include "unimodal/distribution.hpp"
#include "unimodal/transport.hpp"

// Prediction heads and training losses for ordinal classification.
//
// Batch ops take N x (head width) raw network outputs and 1-based labels and
// return graph nodes; losses reduce to the unweighted batch mean. The scalar
// helpers at the bottom evaluate the same graphs on a single sample.
namespace unimodal::ordinal {

using ad::Matrix;
using ad::Tape;
using ad::Var;

enum class HeadKind { Softmax, Unimodal, Binomial, Poisson, OrdinalEncoding };
enum class Nonneg { Relu, Softplus };

enum class LossKind { CE, OE, CDW_CE, BU, PU, UN, WU_KLDiv, WU_Wass, CO2, CO, UU };

struct LossSpec {
  LossKind kind = LossKind::CE;
  double lambda = 1.0;
  double delta = 0.05;
  double cost_exponent = 1.0;
  double cdw_alpha = 1.0;
  /// Poisson temperature; nullopt means learnable (initialized to 1).
  std::optional<double> pu_tau;
  Nonneg un_nonneg = Nonneg::Softplus;
};

/// Registry names: ce, oe, cdw-ce, bu, pu, un, wu-kldiv, wu-wass, co2, co, uu.
LossKind parse_loss(const std::string& name);
std::string to_string(LossKind kind);
const std::vector<std::string>& registered_losses();
/// Spec with the defaults for `kind` (CO forces delta = 0).
LossSpec default_spec(LossKind kind);

HeadKind head_for(LossKind kind);
/// Raw outputs the network must produce for `head` with K classes.
int head_width(HeadKind head, int k);
/// Whether the loss has a lambda-weighted penalty worth sweeping.
bool has_penalty(LossKind kind);

inline constexpr double kPoissonRateFloor = 1e-6;
inline constexpr double kLogClamp = 1e-12;

/// Output of a head on a batch. `scores` are per-class log-scale values with
/// probs = softmax(scores); empty for OrdinalEncoding, whose `logits` feed
/// the threshold sigmoids.
struct HeadOutput {
  HeadKind kind = HeadKind::Softmax;
  int k = 0;
  Var scores;
  Var probs;
  Var log_probs;
  Var logits;
};

/// `tau` is the 1x1 temperature node for Poisson heads (ignored otherwise).
HeadOutput apply_head(HeadKind head, Var raw, int k, Nonneg nonneg = Nonneg::Softplus,
                      std::optional<Var> tau = std::nullopt);

/// Class distributions implied by a head output, one row per sample. OE
/// cumulative outputs are differenced, clamped at 0 and renormalized.
Matrix distributions(const HeadOutput& out);
/// 1-based predicted labels: lowest-index argmax, or 1 + count(c_k > 0.5) for OE.
std::vector<int> predict_labels(const HeadOutput& out);

/// OE cumulative probabilities sigmoid(z), N x (K-1).
Matrix oe_cumulative(const HeadOutput& out);
/// Adjacent differences of OE cumulative values, clamped and renormalized.
Matrix oe_distribution(const Matrix& cumulative);

// Batch losses. `labels` are 1-based, size N.

Var ce_loss(const HeadOutput& out, std::span<const int> labels);
/// Mean over samples of sum over thresholds of binary CE against 1[k* > k].
Var oe_loss(const HeadOutput& out, std::span<const int> labels);
Var cdw_ce_loss(const HeadOutput& out, std::span<const int> labels, double alpha);
/// Consecutive-pair unimodality penalty, batch mean.
Var u_term(Var probs, std::span<const int> labels, double delta);
/// All ordered-pairs unimodality penalty, batch mean.
Var uu_term(Var probs, std::span<const int> labels, double delta);

/// Unimodal projections of each row of `probs` onto mode labels[n]; the
/// detached targets of the WU losses.
Matrix projection_targets(const Matrix& probs, std::span<const int> labels,
                          const transport::CostMatrix& cost);
/// KL(target || probs) per row, batch mean; target is a constant.
Var kl_penalty(const HeadOutput& out, const Matrix& targets);
/// Wasserstein(target, probs) per row, batch mean. Linear cost uses the CDF
/// form; other costs use the dual potential of the probs marginal.
Var wasserstein_penalty(Var probs, const Matrix& targets, const transport::CostMatrix& cost);

/// Full training loss for `spec`. WU losses compute their targets from the
/// current head output unless `wu_targets` is given.
Var loss(const LossSpec& spec, const HeadOutput& out, std::span<const int> labels,
         const Matrix* wu_targets = nullptr);

// Single-sample helpers on plain values.

Distribution unimodal_net_head(std::span<const double> z, Nonneg nonneg);
Distribution binomial_head(double logit, int k);
Distribution poisson_head(double raw, int k, double tau);

struct OeOutput {
  std::vector<double> cumulative;
  Distribution distribution;
  ModeIndex label;
};
OeOutput ordinal_encoding_head(std::span<const double> z);
/// Label from cumulative threshold probabilities.
ModeIndex predict_label_oe(std::span<const double> cumulative);
ModeIndex predict_label(const Distribution& p);

double ce_loss(ModeIndex k_star, const Distribution& p);
double u_term(double delta, ModeIndex k_star, const Distribution& p);
double uu_term(double delta, ModeIndex k_star, const Distribution& p);
double co2_loss(double delta, double lambda, ModeIndex k_star, const Distribution& p);
double cdw_ce_loss(ModeIndex k_star, const Distribution& p, double alpha = 1.0);

enum class D2 { KLDiv, Wasserstein };
struct WuValue {
  double ce = 0.0;
  double penalty = 0.0;
  double total = 0.0;
  Distribution projection;
};
WuValue wu_loss(ModeIndex k_star, const Distribution& p, double lambda, D2 d2,
                const transport::CostMatrix& cost);

}  // namespace unimodal::ordinal
