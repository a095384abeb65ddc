#include "unimodal/lp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <sstream>

#include "unimodal/distribution.hpp"

namespace unimodal::lp {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense simplex tableau. Columns: structural variables, slacks, artificials,
// then the right-hand side. `cost` holds reduced costs with the negated
// objective value in its last entry.
class Tableau {
 public:
  Tableau(RowMatrix t, std::vector<int> basis)
      : t_(std::move(t)), basis_(std::move(basis)), cost_(Eigen::RowVectorXd::Zero(t_.cols())) {}

  int rows() const { return static_cast<int>(t_.rows()); }
  int rhs() const { return static_cast<int>(t_.cols()) - 1; }
  const std::vector<int>& basis() const { return basis_; }
  const RowMatrix& matrix() const { return t_; }
  double objective() const { return -cost_(rhs()); }

  // cost_j = c_j - sum_r c_{B(r)} T(r, j)
  void set_cost(const Eigen::RowVectorXd& c) {
    cost_ = c;
    for (int r = 0; r < rows(); ++r) {
      const double cb = c(basis_[r]);
      if (cb != 0.0) cost_ -= cb * t_.row(r);
    }
  }

  void pivot(int r, int j) {
    t_.row(r) /= t_(r, j);
    for (int i = 0; i < rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, j);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    const double f = cost_(j);
    if (f != 0.0) cost_ -= f * t_.row(r);
    basis_[r] = j;
  }

  enum class Outcome { Optimal, Unbounded };

  // Bland's rule over columns [0, num_cols).
  Outcome run(int num_cols, double opt_tol, int& iterations, int max_iters) {
    for (;;) {
      int enter = -1;
      for (int j = 0; j < num_cols; ++j) {
        if (cost_(j) < -opt_tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return Outcome::Optimal;

      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < rows(); ++r) {
        const double a = t_(r, enter);
        if (a <= kPivotFloor) continue;
        const double ratio = std::max(t_(r, rhs()), 0.0) / a;
        const double slack = 1e-12 * std::max(1.0, std::abs(best));
        if (leave < 0 || ratio < best - slack) {
          best = ratio;
          leave = r;
        } else if (ratio <= best + slack && basis_[r] < basis_[leave]) {
          leave = r;  // Bland: lowest basic index among ties
        }
      }
      if (leave < 0) return Outcome::Unbounded;
      if (++iterations > max_iters) {
        throw LpIterationLimit("simplex exceeded " + std::to_string(max_iters) +
                               " pivots without reaching a verdict");
      }
      pivot(leave, enter);
    }
  }

  void drop(const std::vector<int>& keep_rows, int keep_cols) {
    RowMatrix next(static_cast<Eigen::Index>(keep_rows.size()), keep_cols + 1);
    std::vector<int> next_basis;
    for (std::size_t i = 0; i < keep_rows.size(); ++i) {
      const int r = keep_rows[i];
      next.row(static_cast<Eigen::Index>(i)).head(keep_cols) = t_.row(r).head(keep_cols);
      next(static_cast<Eigen::Index>(i), keep_cols) = t_(r, rhs());
      next_basis.push_back(basis_[r]);
    }
    t_ = std::move(next);
    basis_ = std::move(next_basis);
    cost_ = Eigen::RowVectorXd::Zero(t_.cols());
  }

 private:
  RowMatrix t_;
  std::vector<int> basis_;
  Eigen::RowVectorXd cost_;
};

// [A_eq 0; A_ub I] and the matching right-hand side.
void standard_form(const LinearProgram& lp, Eigen::MatrixXd& s, Eigen::VectorXd& b) {
  const int n = lp.num_vars(), me = lp.num_eq(), mu = lp.num_ub();
  s = Eigen::MatrixXd::Zero(me + mu, n + mu);
  b.resize(me + mu);
  if (me) {
    s.topLeftCorner(me, n) = lp.a_eq;
    b.head(me) = lp.b_eq;
  }
  if (mu) {
    s.bottomLeftCorner(mu, n) = lp.a_ub;
    s.bottomRightCorner(mu, mu).setIdentity();
    b.tail(mu) = lp.b_ub;
  }
}

}  // namespace

LinearProgram LinearProgram::with_variables(int n) {
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Zero(n);
  lp.a_eq.resize(0, n);
  lp.b_eq.resize(0);
  lp.a_ub.resize(0, n);
  lp.b_ub.resize(0);
  return lp;
}

void LinearProgram::validate() const {
  const auto n = objective.size();
  if (n < 1) throw ContractViolation("LP needs at least one variable");
  if (a_eq.cols() != n && a_eq.rows() != 0) throw ContractViolation("A_eq column count != n");
  if (a_ub.cols() != n && a_ub.rows() != 0) throw ContractViolation("A_ub column count != n");
  if (a_eq.rows() != b_eq.size()) throw ContractViolation("A_eq rows != |b_eq|");
  if (a_ub.rows() != b_ub.size()) throw ContractViolation("A_ub rows != |b_ub|");
  if (!objective.allFinite() || !b_eq.allFinite() || !b_ub.allFinite() || !a_eq.allFinite() ||
      !a_ub.allFinite()) {
    throw ContractViolation("LP data must be finite");
  }
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

LpSolution solve(const LinearProgram& lp, const SolveOptions& options) {
  lp.validate();
  const int n = lp.num_vars(), me = lp.num_eq(), mu = lp.num_ub();
  const int m = me + mu;
  const int real_cols = n + mu;
  const int max_iters = options.max_iters > 0 ? options.max_iters : 50 * (n + m);

  Eigen::MatrixXd s;
  Eigen::VectorXd b;
  standard_form(lp, s, b);

  // Flip rows so that b >= 0; a <= row keeps its slack as the starting basic
  // variable only if it was not flipped.
  std::vector<double> sign(static_cast<std::size_t>(m), 1.0);
  std::vector<int> artificial_rows;
  for (int r = 0; r < m; ++r) {
    if (b(r) < 0.0) sign[r] = -1.0;
    if (r < me || sign[r] < 0.0) artificial_rows.push_back(r);
  }
  const int na = static_cast<int>(artificial_rows.size());

  RowMatrix t = RowMatrix::Zero(m, real_cols + na + 1);
  std::vector<int> basis(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r) {
    t.row(r).head(real_cols) = sign[r] * s.row(r);
    t(r, real_cols + na) = sign[r] * b(r);
    if (r >= me && sign[r] > 0.0) basis[r] = n + (r - me);
  }
  for (int a = 0; a < na; ++a) {
    t(artificial_rows[a], real_cols + a) = 1.0;
    basis[artificial_rows[a]] = real_cols + a;
  }

  Tableau tab(std::move(t), std::move(basis));
  LpSolution sol;
  int iterations = 0;
  std::vector<int> kept_rows(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r) kept_rows[r] = r;

  if (na > 0) {
    Eigen::RowVectorXd c1 = Eigen::RowVectorXd::Zero(real_cols + na + 1);
    c1.segment(real_cols, na).setOnes();
    tab.set_cost(c1);
    tab.run(real_cols + na, options.opt_tol, iterations, max_iters);
    const double scale = std::max(1.0, b.cwiseAbs().sum());
    if (tab.objective() > options.feas_tol * scale) {
      sol.status = LpStatus::Infeasible;
      sol.iterations = iterations;
      return sol;
    }
    // Pivot zero-level artificials out of the basis; rows where that is
    // impossible are linear combinations of the others.
    std::vector<int> keep;
    for (int r = 0; r < tab.rows(); ++r) {
      if (tab.basis()[r] < real_cols) {
        keep.push_back(r);
        continue;
      }
      int col = -1;
      for (int j = 0; j < real_cols; ++j) {
        if (std::abs(tab.matrix()(r, j)) > kPivotFloor) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        tab.pivot(r, col);
        keep.push_back(r);
      }
    }
    tab.drop(keep, real_cols);
    kept_rows = keep;
  }

  Eigen::RowVectorXd c2 = Eigen::RowVectorXd::Zero(real_cols + 1);
  c2.head(n) = lp.objective.transpose();
  tab.set_cost(c2);
  const auto outcome = tab.run(real_cols, options.opt_tol, iterations, max_iters);
  sol.iterations = iterations;
  if (outcome == Tableau::Outcome::Unbounded) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  sol.status = LpStatus::Optimal;
  sol.basis = tab.basis();
  sol.x = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < tab.rows(); ++r) {
    const int j = tab.basis()[r];
    if (j < n) {
      double v = tab.matrix()(r, tab.rhs());
      if (v < 0.0 && v > -options.feas_tol) v = 0.0;
      sol.x(j) = v;
    }
  }
  sol.objective_value = lp.objective.dot(sol.x);

  // Duals from B^T y = c_B on the surviving rows.
  sol.duals = Eigen::VectorXd::Zero(m);
  const auto mb = static_cast<Eigen::Index>(kept_rows.size());
  if (mb > 0) {
    Eigen::MatrixXd bmat(mb, mb);
    Eigen::VectorXd cb(mb);
    for (Eigen::Index i = 0; i < mb; ++i) {
      const int j = sol.basis[static_cast<std::size_t>(i)];
      cb(i) = j < n ? lp.objective(j) : 0.0;
      for (Eigen::Index r = 0; r < mb; ++r) {
        const int row = kept_rows[static_cast<std::size_t>(r)];
        bmat(r, i) = sign[row] * s(row, j);
      }
    }
    const Eigen::VectorXd y = bmat.transpose().partialPivLu().solve(cb);
    for (Eigen::Index r = 0; r < mb; ++r) {
      const int row = kept_rows[static_cast<std::size_t>(r)];
      sol.duals(row) = sign[row] * y(r);
    }
  }
  return sol;
}

bool verify_solution(const LinearProgram& lp, const LpSolution& sol, double tol) {
  if (sol.status != LpStatus::Optimal) return false;
  const int n = lp.num_vars(), me = lp.num_eq(), mu = lp.num_ub();
  if (sol.x.size() != n || !sol.x.allFinite()) return false;

  // Primal feasibility.
  if (sol.x.minCoeff() < -tol) return false;
  if (me && (lp.a_eq * sol.x - lp.b_eq).cwiseAbs().maxCoeff() > tol) return false;
  if (mu && (lp.a_ub * sol.x - lp.b_ub).maxCoeff() > tol) return false;

  Eigen::MatrixXd s;
  Eigen::VectorXd b;
  standard_form(lp, s, b);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + mu);
  c.head(n) = lp.objective;
  Eigen::VectorXd xs(n + mu);
  xs.head(n) = sol.x;
  if (mu) xs.tail(mu) = lp.b_ub - lp.a_ub * sol.x;

  std::vector<int> basis = sol.basis;
  if (basis.empty()) {
    for (int j = 0; j < n + mu; ++j) {
      if (xs(j) > tol) basis.push_back(j);
    }
  }
  for (int j : basis) {
    if (j < 0 || j >= n + mu) return false;
  }

  const int m = me + mu;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  if (m > 0 && !basis.empty()) {
    Eigen::MatrixXd bt(static_cast<Eigen::Index>(basis.size()), m);
    Eigen::VectorXd cb(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) {
      bt.row(static_cast<Eigen::Index>(i)) = s.col(basis[i]).transpose();
      cb(static_cast<Eigen::Index>(i)) = c(basis[i]);
    }
    y = bt.completeOrthogonalDecomposition().solve(cb);
    if ((bt * y - cb).cwiseAbs().maxCoeff() > tol * (1.0 + cb.cwiseAbs().maxCoeff())) {
      return false;
    }
  }
  const Eigen::VectorXd reduced = c - s.transpose() * y;
  if (reduced.size() && reduced.minCoeff() < -tol) return false;
  const double primal = lp.objective.dot(sol.x);
  const double dual = m > 0 ? b.dot(y) : 0.0;
  return std::abs(primal - dual) <= tol * (1.0 + std::abs(primal));
}

LinearProgram read_lp(std::istream& in) {
  std::vector<double> tokens;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        tokens.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ContractViolation("LP file line " + std::to_string(line_no) +
                                ": cannot parse \"" + tok + "\"");
      }
    }
  }
  if (tokens.size() < 3) throw ContractViolation("LP file: missing header \"n m_eq m_ub\"");
  const auto n = static_cast<int>(tokens[0]);
  const auto me = static_cast<int>(tokens[1]);
  const auto mu = static_cast<int>(tokens[2]);
  if (n < 1 || me < 0 || mu < 0) throw ContractViolation("LP file: bad header");
  const std::size_t expected = 3 + static_cast<std::size_t>(n) +
                               static_cast<std::size_t>(me + mu) * static_cast<std::size_t>(n + 1);
  if (tokens.size() != expected) {
    throw ContractViolation("LP file: expected " + std::to_string(expected) + " numbers, got " +
                            std::to_string(tokens.size()));
  }
  LinearProgram lp = LinearProgram::with_variables(n);
  std::size_t pos = 3;
  for (int j = 0; j < n; ++j) lp.objective(j) = tokens[pos++];
  auto read_block = [&](int rows, Eigen::MatrixXd& a, Eigen::VectorXd& rhs) {
    a.resize(rows, n);
    rhs.resize(rows);
    for (int r = 0; r < rows; ++r) {
      for (int j = 0; j < n; ++j) a(r, j) = tokens[pos++];
      rhs(r) = tokens[pos++];
    }
  };
  read_block(me, lp.a_eq, lp.b_eq);
  read_block(mu, lp.a_ub, lp.b_ub);
  lp.validate();
  return lp;
}

}  // namespace unimodal::lp
