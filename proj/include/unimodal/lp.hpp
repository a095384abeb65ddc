#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace unimodal::lp {

/// min c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd a_ub;
  Eigen::VectorXd b_ub;

  /// An LP over n variables with no constraints yet.
  static LinearProgram with_variables(int n);

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_eq() const { return static_cast<int>(a_eq.rows()); }
  int num_ub() const { return static_cast<int>(a_ub.rows()); }

  /// Throws ContractViolation on inconsistent dimensions or non-finite data.
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective_value = 0.0;
  /// Final basis as standard-form column indices: 0..n-1 are the original
  /// variables, n..n+m_ub-1 the slacks of the <= rows.
  std::vector<int> basis;
  /// Dual values for the eq rows followed by the ub rows (zero for rows found
  /// redundant). Only meaningful when status is Optimal.
  Eigen::VectorXd duals;
  int iterations = 0;
};

/// Signals numerical trouble: the pivot budget ran out before the method
/// reached a verdict. Never confused with infeasibility.
class LpIterationLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  /// Pivot budget; 0 means 50 * (n + m).
  int max_iters = 0;
};

/// Inclusive lower bound on |pivot| for a row to take part in a ratio test.
inline constexpr double kPivotFloor = 1e-11;

/// Two-phase primal simplex on a dense tableau with Bland's rule.
/// Deterministic: the same LP always yields the same basis and x.
LpSolution solve(const LinearProgram& lp, const SolveOptions& options = {});

/// Checks primal feasibility within `tol` and certifies optimality with the
/// dual of the solution's basis (reduced costs >= -tol, zero duality gap).
/// When the solution carries no basis, one is inferred from the support of x.
bool verify_solution(const LinearProgram& lp, const LpSolution& sol, double tol = 1e-7);

/// Reads the plain-text LP format used by the `lp solve` CLI hook:
///
///     n m_eq m_ub
///     c_1 ... c_n
///     <m_eq rows of: a_1 ... a_n b>
///     <m_ub rows of: a_1 ... a_n b>
///
/// Blank lines and lines starting with '#' are ignored.
LinearProgram read_lp(std::istream& in);

}  // namespace unimodal::lp
