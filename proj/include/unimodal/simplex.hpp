#pragma once

#include <cstdint>
#include <vector>

#include "unimodal/distribution.hpp"

// Geometry of unimodal distributions on the probability simplex.
namespace unimodal::simplex {

inline constexpr double kDefaultTolerance = 1e-12;

/// p_1 <= ... <= p_k >= ... >= p_K, each comparison relaxed by `tol`.
bool is_unimodal_with_mode(const Distribution& p, ModeIndex k, double tol = kDefaultTolerance);

bool is_unimodal(const Distribution& p, double tol = kDefaultTolerance);

/// Every k for which p is unimodal with mode k, ascending. Empty iff p is not
/// unimodal. For the uniform distribution this is 1..K.
std::vector<ModeIndex> modes(const Distribution& p, double tol = kDefaultTolerance);

/// Same predicates over a raw span, for hot loops that already hold a valid
/// probability vector (no validation).
bool is_unimodal_with_mode(std::span<const double> p, int k, double tol = kDefaultTolerance);
bool is_unimodal(std::span<const double> p, double tol = kDefaultTolerance);

struct UnimodalFractions {
  double us = 0.0;  ///< fraction of the simplex that is unimodal
  double ns = 0.0;  ///< complement, computed as 1 - us
};

/// Exact fractions from the recursion ns(K) = (K-2)/K + (2/K) ns(K-1) with
/// ns(3) = 1/3. Throws DomainError for K < 3.
UnimodalFractions unimodal_fraction_exact(int k);

/// Like unimodal_fraction_exact but also accepts K = 2 (every distribution on
/// the 1-simplex is unimodal, so ns(2) = 0).
UnimodalFractions unimodal_fraction(int k);

/// n draws from the flat Dirichlet on the (K-1)-simplex via normalized
/// exponential variates. Deterministic in `seed`.
std::vector<Distribution> sample_uniform_simplex(int k, std::size_t n, std::uint64_t seed);

struct FractionEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

/// Monte-Carlo estimate of us(K). Requires K >= 3 and n >= 1000.
FractionEstimate estimate_unimodal_fraction_mc(int k, std::size_t n, std::uint64_t seed);

/// Discrete path from `p` to the one-hot at `k` along unimodal distributions
/// with mode k. Mass of p_1, ..., p_{k-1} is pushed in turn onto the entries
/// between it and the mode, then p_K, ..., p_{k+1} the same way from the
/// right. Each stage contributes `steps_per_stage` waypoints. The first
/// waypoint is `p` itself.
std::vector<Distribution> connectedness_path(const Distribution& p, ModeIndex k,
                                             int steps_per_stage);

}  // namespace unimodal::simplex
