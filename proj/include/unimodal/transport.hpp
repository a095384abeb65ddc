#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "unimodal/distribution.hpp"
#include "unimodal/lp.hpp"

namespace unimodal::transport {

/// Ground cost c_ij >= 0 between class positions i and j.
class CostMatrix {
 public:
  /// c_ij = |i - j|^r. Requires K >= 2 and r > 0.
  static CostMatrix power(int k, double exponent = 1.0);

  /// Arbitrary square, nonnegative, finite matrix.
  explicit CostMatrix(Eigen::MatrixXd entries);

  int size() const { return static_cast<int>(entries_.rows()); }
  double operator()(int i, int j) const { return entries_(i, j); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  bool symmetric() const { return entries_.isApprox(entries_.transpose(), 0.0); }

 private:
  Eigen::MatrixXd entries_;
};

struct TransportPlan {
  Eigen::MatrixXd t;  ///< K x K, rows index the first distribution
  double objective = 0.0;
};

/// Wraps an LP that did not reach Optimal.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WassersteinResult {
  double value = 0.0;
  TransportPlan plan;
  /// Dual potentials of the two marginal constraints; value = alpha.p + beta.q.
  /// beta is a subgradient of the distance with respect to q.
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
};

/// Optimal transport LP: min sum t_ij c_ij with row sums p and column sums q.
WassersteinResult wasserstein_distance(const Distribution& p, const Distribution& q,
                                       const CostMatrix& cost);

/// Closed form for unit spacing and linear cost:
/// sum_{k<K} |CDF_p(k) - CDF_q(k)|.
double wasserstein_distance_cdf(const Distribution& p, const Distribution& q);

struct Projection {
  Distribution projection;
  double distance = 0.0;
  TransportPlan plan;
};

/// Wasserstein projection of q onto the unimodal distributions with mode k.
///
/// Plan rows are projection bins and columns are q bins: column sums are
/// pinned to q, row sums must rise up to k and fall after it. The projection
/// is the row-sum vector, renormalized (the raw total must be within 1e-7 of
/// one). A q that is already unimodal with mode k is returned unchanged at
/// distance zero without solving the LP.
Projection project_unimodal(const Distribution& q, ModeIndex k, const CostMatrix& cost);

/// Same as project_unimodal(q, k, cost).distance.
double distance_to_unimodal_set(const Distribution& q, ModeIndex k, const CostMatrix& cost);

/// The LP solved by project_unimodal, exposed for inspection and tests.
lp::LinearProgram projection_lp(const Distribution& q, ModeIndex k, const CostMatrix& cost);

/// The LP solved by wasserstein_distance.
lp::LinearProgram transport_lp(const Distribution& p, const Distribution& q,
                               const CostMatrix& cost);

}  // namespace unimodal::transport
