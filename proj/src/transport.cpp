#include "unimodal/transport.hpp"

#include <cmath>
#include <numeric>

#include "unimodal/simplex.hpp"

namespace unimodal::transport {
namespace {

void check_sizes(const Distribution& p, const Distribution& q, const CostMatrix& cost) {
  if (p.size() != q.size()) {
    throw ContractViolation("distributions differ in length: " + std::to_string(p.size()) +
                            " vs " + std::to_string(q.size()));
  }
  if (static_cast<std::size_t>(cost.size()) != p.size()) {
    throw ContractViolation("cost matrix is " + std::to_string(cost.size()) +
                            "x" + std::to_string(cost.size()) + " but K=" +
                            std::to_string(p.size()));
  }
}

lp::LpSolution solve_or_throw(const lp::LinearProgram& prog, const char* what) {
  lp::LpSolution sol;
  try {
    sol = lp::solve(prog);
  } catch (const lp::LpIterationLimit& e) {
    throw lp::LpIterationLimit(std::string(what) + ": " + e.what());
  }
  if (sol.status != lp::LpStatus::Optimal) {
    throw TransportError(std::string(what) + ": LP returned " + lp::to_string(sol.status));
  }
  return sol;
}

TransportPlan unflatten(const Eigen::VectorXd& x, int k, double objective) {
  TransportPlan plan;
  plan.t.resize(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) plan.t(i, j) = x(i * k + j);
  }
  plan.objective = objective;
  return plan;
}

TransportPlan diagonal_plan(const Distribution& q) {
  const int k = static_cast<int>(q.size());
  TransportPlan plan;
  plan.t = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) plan.t(i, i) = q[i];
  return plan;
}

}  // namespace

CostMatrix CostMatrix::power(int k, double exponent) {
  if (k < 2) throw ContractViolation("cost matrix needs K >= 2");
  if (!(exponent > 0.0)) throw ContractViolation("cost exponent must be > 0");
  Eigen::MatrixXd c(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) c(i, j) = std::pow(std::abs(i - j), exponent);
  }
  return CostMatrix(std::move(c));
}

CostMatrix::CostMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 2) {
    throw ContractViolation("cost matrix must be square with K >= 2");
  }
  if (!entries_.allFinite() || entries_.minCoeff() < 0.0) {
    throw ContractViolation("cost entries must be finite and nonnegative");
  }
}

lp::LinearProgram transport_lp(const Distribution& p, const Distribution& q,
                               const CostMatrix& cost) {
  check_sizes(p, q, cost);
  const int k = static_cast<int>(p.size());
  lp::LinearProgram prog = lp::LinearProgram::with_variables(k * k);
  prog.a_eq = Eigen::MatrixXd::Zero(2 * k, k * k);
  prog.b_eq.resize(2 * k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      prog.objective(i * k + j) = cost(i, j);
      prog.a_eq(i, i * k + j) = 1.0;      // row sum i = p_i
      prog.a_eq(k + j, i * k + j) = 1.0;  // column sum j = q_j
    }
    prog.b_eq(i) = p[i];
    prog.b_eq(k + i) = q[i];
  }
  return prog;
}

WassersteinResult wasserstein_distance(const Distribution& p, const Distribution& q,
                                       const CostMatrix& cost) {
  check_sizes(p, q, cost);
  const int k = static_cast<int>(p.size());
  WassersteinResult out;
  if (p == q) {
    out.plan = diagonal_plan(q);
    out.alpha = Eigen::VectorXd::Zero(k);
    out.beta = Eigen::VectorXd::Zero(k);
    return out;
  }
  const auto prog = transport_lp(p, q, cost);
  const auto sol = solve_or_throw(prog, "wasserstein_distance");
  out.value = std::max(sol.objective_value, 0.0);
  out.plan = unflatten(sol.x, k, out.value);
  out.alpha = sol.duals.head(k);
  out.beta = sol.duals.tail(k);
  return out;
}

double wasserstein_distance_cdf(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw ContractViolation("distributions differ in length");
  double running = 0.0, total = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    running += p[i] - q[i];
    total += std::abs(running);
  }
  return total;
}

lp::LinearProgram projection_lp(const Distribution& q, ModeIndex k, const CostMatrix& cost) {
  check_sizes(q, q, cost);
  check_mode(k, q.size());
  const int n = static_cast<int>(q.size());
  const int m = k.zero_based();
  lp::LinearProgram prog = lp::LinearProgram::with_variables(n * n);
  prog.a_eq = Eigen::MatrixXd::Zero(n, n * n);
  prog.b_eq.resize(n);
  prog.a_ub = Eigen::MatrixXd::Zero(n - 1, n * n);
  prog.b_ub = Eigen::VectorXd::Zero(n - 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      prog.objective(i * n + j) = cost(i, j);
      prog.a_eq(j, i * n + j) = 1.0;
    }
    prog.b_eq(i) = q[i];
  }
  // Row r compares row sums i = r and i + 1: rising before the mode
  // (sum_i - sum_{i+1} <= 0), falling from the mode on (sum_{i+1} - sum_i <= 0).
  for (int i = 0; i + 1 < n; ++i) {
    const double s = i < m ? 1.0 : -1.0;
    for (int j = 0; j < n; ++j) {
      prog.a_ub(i, i * n + j) = s;
      prog.a_ub(i, (i + 1) * n + j) = -s;
    }
  }
  return prog;
}

namespace {

bool mirror_symmetric(const CostMatrix& cost) {
  const int n = cost.size();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (cost(i, j) != cost(n - 1 - i, n - 1 - j)) return false;
    }
  }
  return true;
}

TransportPlan solve_projection_plan(const Distribution& q, ModeIndex k, const CostMatrix& cost) {
  const auto sol = solve_or_throw(projection_lp(q, k, cost), "project_unimodal");
  return unflatten(sol.x, static_cast<int>(q.size()), std::max(sol.objective_value, 0.0));
}

}  // namespace

Projection project_unimodal(const Distribution& q, ModeIndex k, const CostMatrix& cost) {
  check_sizes(q, q, cost);
  check_mode(k, q.size());
  if (simplex::is_unimodal_with_mode(q, k)) {
    return {q, 0.0, diagonal_plan(q)};
  }
  const int n = static_cast<int>(q.size());
  TransportPlan plan = solve_projection_plan(q, k, cost);
  if (mirror_symmetric(cost)) {
    // Optimal plans form a convex set. Averaging with the mirrored solution of
    // the mirrored problem picks a reversal-covariant member of it.
    const TransportPlan mirrored =
        solve_projection_plan(q.reversed(), ModeIndex(n + 1 - k.value), cost);
    plan.t = 0.5 * (plan.t + mirrored.t.reverse());
    plan.objective = (plan.t.array() * cost.entries().array()).sum();
  }
  std::vector<double> rows(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rows[i] = std::max(plan.t.row(i).sum(), 0.0);
  const double total = std::accumulate(rows.begin(), rows.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-7) {
    throw TransportError("project_unimodal: projection total " + std::to_string(total) +
                         " deviates from 1 by more than 1e-7");
  }
  for (double& r : rows) r /= total;
  return {Distribution(std::move(rows)), plan.objective, std::move(plan)};
}

double distance_to_unimodal_set(const Distribution& q, ModeIndex k, const CostMatrix& cost) {
  return project_unimodal(q, k, cost).distance;
}

}  // namespace unimodal::transport
