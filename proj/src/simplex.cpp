#include "unimodal/simplex.hpp"

#include <cmath>
#include <random>

namespace unimodal::simplex {

bool is_unimodal_with_mode(std::span<const double> p, int k, double tol) {
  const int n = static_cast<int>(p.size());
  // 0-based mode index m = k - 1.
  const int m = k - 1;
  for (int i = 0; i < m; ++i) {
    if (p[i] > p[i + 1] + tol) return false;
  }
  for (int i = m; i + 1 < n; ++i) {
    if (p[i + 1] > p[i] + tol) return false;
  }
  return true;
}

bool is_unimodal(std::span<const double> p, double tol) {
  const int n = static_cast<int>(p.size());
  for (int k = 1; k <= n; ++k) {
    if (is_unimodal_with_mode(p, k, tol)) return true;
  }
  return false;
}

bool is_unimodal_with_mode(const Distribution& p, ModeIndex k, double tol) {
  check_mode(k, p.size());
  if (tol < 0.0) throw ContractViolation("tolerance must be nonnegative");
  return is_unimodal_with_mode(p.values(), k.value, tol);
}

bool is_unimodal(const Distribution& p, double tol) {
  if (tol < 0.0) throw ContractViolation("tolerance must be nonnegative");
  return is_unimodal(p.values(), tol);
}

std::vector<ModeIndex> modes(const Distribution& p, double tol) {
  std::vector<ModeIndex> out;
  for (int k = 1; k <= static_cast<int>(p.size()); ++k) {
    if (is_unimodal_with_mode(p.values(), k, tol)) out.emplace_back(k);
  }
  return out;
}

UnimodalFractions unimodal_fraction_exact(int k) {
  if (k < 3) {
    throw DomainError("unimodal fraction recursion is defined for K >= 3, got K=" +
                      std::to_string(k));
  }
  double ns = 1.0 / 3.0;
  for (int j = 4; j <= k; ++j) {
    const double kd = static_cast<double>(j);
    ns = (kd - 2.0) / kd + (2.0 / kd) * ns;
  }
  return {1.0 - ns, ns};
}

UnimodalFractions unimodal_fraction(int k) {
  if (k == 2) return {1.0, 0.0};
  return unimodal_fraction_exact(k);
}

std::vector<Distribution> sample_uniform_simplex(int k, std::size_t n, std::uint64_t seed) {
  if (k < 2) throw ContractViolation("sample_uniform_simplex needs K >= 2");
  if (n < 1) throw ContractViolation("sample_uniform_simplex needs n >= 1");
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::vector<Distribution> out;
  out.reserve(n);
  std::vector<double> draw(static_cast<std::size_t>(k));
  for (std::size_t s = 0; s < n; ++s) {
    double total = 0.0;
    for (double& v : draw) {
      v = expo(rng);
      total += v;
    }
    for (double& v : draw) v /= total;
    out.emplace_back(draw);
  }
  return out;
}

FractionEstimate estimate_unimodal_fraction_mc(int k, std::size_t n, std::uint64_t seed) {
  if (k < 3) throw DomainError("Monte-Carlo fraction estimate needs K >= 3");
  if (n < 1000) throw ContractViolation("Monte-Carlo fraction estimate needs n >= 1000");
  // Same generator as sample_uniform_simplex, without materializing samples.
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> draw(static_cast<std::size_t>(k));
  std::size_t hits = 0;
  for (std::size_t s = 0; s < n; ++s) {
    double total = 0.0;
    for (double& v : draw) {
      v = expo(rng);
      total += v;
    }
    for (double& v : draw) v /= total;
    if (is_unimodal(std::span<const double>(draw), kDefaultTolerance)) ++hits;
  }
  const double est = static_cast<double>(hits) / static_cast<double>(n);
  return {est, std::sqrt(est * (1.0 - est) / static_cast<double>(n))};
}

std::vector<Distribution> connectedness_path(const Distribution& p, ModeIndex k,
                                             int steps_per_stage) {
  check_mode(k, p.size());
  if (steps_per_stage < 1) throw ContractViolation("steps_per_stage must be >= 1");
  if (!is_unimodal_with_mode(p, k)) {
    throw DomainError("connectedness_path: distribution is not unimodal with mode " +
                      std::to_string(k.value));
  }
  const int n = static_cast<int>(p.size());
  const int m = k.zero_based();

  std::vector<int> order;
  for (int i = 0; i < m; ++i) order.push_back(i);
  for (int i = n - 1; i > m; --i) order.push_back(i);

  std::vector<Distribution> path{p};
  std::vector<double> current = p.vector();
  for (int src : order) {
    // Receivers: the entries strictly between src and the mode, plus the mode.
    const int lo = src < m ? src + 1 : m;
    const int hi = src < m ? m : src - 1;
    const double share = current[src] / static_cast<double>(hi - lo + 1);
    const std::vector<double> base = current;
    for (int s = 1; s <= steps_per_stage; ++s) {
      const double delta = static_cast<double>(s) / steps_per_stage;
      std::vector<double> q = base;
      q[src] = s == steps_per_stage ? 0.0 : base[src] - delta * base[src];
      for (int j = lo; j <= hi; ++j) q[j] = base[j] + delta * share;
      path.emplace_back(q);
      if (s == steps_per_stage) current = std::move(q);
    }
  }
  // Every other entry is exactly zero at this point; snap the mode to 1.
  if (!order.empty()) path.back() = Distribution::one_hot(p.size(), k);
  return path;
}

}  // namespace unimodal::simplex
