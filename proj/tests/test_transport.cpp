#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "test_support.hpp"
#include "unimodal/simplex.hpp"
#include "unimodal/transport.hpp"

using namespace unimodal;
using namespace unimodal::transport;

namespace {

struct GridOptimum {
  double distance = std::numeric_limits<double>::infinity();
  std::vector<double> argmin;
};

// Brute-force nearest mode-k unimodal distribution on a 1/steps grid under the
// CDF form of the linear-cost distance.
GridOptimum grid_projection(const Distribution& q, int mode, int steps) {
  GridOptimum best;
  oracle::for_each_unimodal_grid_point(
      static_cast<int>(q.size()), mode, steps, [&](const std::vector<double>& u) {
        const double d = oracle::cdf_distance(u, q.vector());
        if (d < best.distance) {
          best.distance = d;
          best.argmin = u;
        }
      });
  return best;
}

}  // namespace

TEST(CostMatrix, PowerFamily) {
  const auto c = CostMatrix::power(4, 2.0);
  EXPECT_EQ(c(0, 3), 9.0);
  EXPECT_EQ(c(2, 2), 0.0);
  EXPECT_TRUE(c.symmetric());
  EXPECT_THROW(CostMatrix::power(1), ContractViolation);
  EXPECT_THROW(CostMatrix::power(3, 0.0), ContractViolation);
  EXPECT_THROW(CostMatrix(Eigen::MatrixXd::Constant(3, 3, -1.0)), ContractViolation);
}

TEST(Wasserstein, IdenticalDistributions) {
  const Distribution p{0.1, 0.6, 0.3};
  const auto w = wasserstein_distance(p, p, CostMatrix::power(3));
  EXPECT_EQ(w.value, 0.0);
  EXPECT_NEAR(w.plan.t.trace(), 1.0, 1e-12);
  EXPECT_EQ(wasserstein_distance_cdf(p, p), 0.0);
}

TEST(Wasserstein, OppositeOneHots) {
  for (int k = 2; k <= 8; ++k) {
    const auto first = Distribution::one_hot(static_cast<std::size_t>(k), ModeIndex(1));
    const auto last = Distribution::one_hot(static_cast<std::size_t>(k), ModeIndex(k));
    EXPECT_NEAR(wasserstein_distance(first, last, CostMatrix::power(k)).value, k - 1.0, 1e-12);
  }
  EXPECT_EQ(wasserstein_distance_cdf(Distribution{1.0, 0.0}, Distribution{0.0, 1.0}), 1.0);
}

TEST(Wasserstein, CdfHandExample) {
  // CDFs (0.5, 1.0) and (0.0, 0.5): both half-masses move one step.
  EXPECT_DOUBLE_EQ(
      wasserstein_distance_cdf(Distribution{0.5, 0.5, 0.0}, Distribution{0.0, 0.5, 0.5}), 1.0);
  EXPECT_NEAR(wasserstein_distance(Distribution{0.5, 0.5, 0.0}, Distribution{0.0, 0.5, 0.5},
                                   CostMatrix::power(3))
                  .value,
              1.0, 1e-12);
}

TEST(Wasserstein, LpMatchesCdfOnRandomPairs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + trial % 9;
    const auto p = oracle::random_distribution(rng, k);
    const auto q = oracle::random_distribution(rng, k);
    const auto w = wasserstein_distance(p, q, CostMatrix::power(k));
    ASSERT_NEAR(w.value, wasserstein_distance_cdf(p, q), 1e-7) << "trial " << trial;
    EXPECT_GE(w.plan.t.minCoeff(), -1e-12);
    EXPECT_NEAR(w.plan.t.sum(), 1.0, 1e-8);
    // Strong duality of the returned potentials.
    const Eigen::Map<const Eigen::VectorXd> pv(p.values().data(), k), qv(q.values().data(), k);
    EXPECT_NEAR(w.alpha.dot(pv) + w.beta.dot(qv), w.value, 1e-9);
  }
}

TEST(Wasserstein, RejectsMismatchedSizes) {
  EXPECT_THROW(wasserstein_distance(Distribution{0.5, 0.5}, Distribution{0.2, 0.3, 0.5},
                                    CostMatrix::power(2)),
               ContractViolation);
  EXPECT_THROW(wasserstein_distance(Distribution{0.5, 0.5}, Distribution{0.5, 0.5},
                                    CostMatrix::power(3)),
               ContractViolation);
}

TEST(Projection, UnimodalInputIsFixedPoint) {
  const Distribution q{0.2, 0.5, 0.3};
  const auto proj = project_unimodal(q, ModeIndex(2), CostMatrix::power(3));
  EXPECT_EQ(proj.projection, q);
  EXPECT_EQ(proj.distance, 0.0);
  for (int k = 1; k <= 4; ++k) {
    const auto u = project_unimodal(Distribution::uniform(4), ModeIndex(k), CostMatrix::power(4));
    EXPECT_EQ(u.projection, Distribution::uniform(4));
    EXPECT_EQ(u.distance, 0.0);
  }
}

TEST(Projection, WorkedExampleMatchesGridSearch) {
  const Distribution q{2.0 / 6, 3.0 / 6, 0.0, 1.0 / 6};
  const auto proj = project_unimodal(q, ModeIndex(4), CostMatrix::power(4));
  const auto grid = grid_projection(q, 4, 100);
  EXPECT_LE(proj.distance, grid.distance + 1e-12);
  EXPECT_GE(proj.distance, grid.distance - 0.02);
  EXPECT_TRUE(simplex::is_unimodal_with_mode(proj.projection, ModeIndex(4), 1e-8));
  // The projection is itself at the reported distance from q.
  EXPECT_NEAR(wasserstein_distance_cdf(proj.projection, q), proj.distance, 1e-9);
}

TEST(Projection, ThreeClassSelfConsistency) {
  const Distribution q{0.4, 0.1, 0.5};
  const auto cost = CostMatrix::power(3);
  const auto proj = project_unimodal(q, ModeIndex(3), cost);
  const double d = distance_to_unimodal_set(q, ModeIndex(3), cost);
  EXPECT_EQ(d, proj.distance);
  EXPECT_NEAR(d, wasserstein_distance(q, proj.projection, cost).value, 1e-9);
  const auto grid = grid_projection(q, 3, 100);
  EXPECT_LE(d, grid.distance + 1e-12);
  EXPECT_GE(d, grid.distance - 0.02);
}

TEST(Projection, RandomInputsAgainstGridOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = trial % 2 ? 3 : 4;
    const int mode = 1 + static_cast<int>(rng() % static_cast<unsigned>(k));
    const auto q = oracle::random_distribution(rng, k);
    const auto proj = project_unimodal(q, ModeIndex(mode), CostMatrix::power(k));
    const auto grid = grid_projection(q, mode, 100);
    // Optimal over the polytope, so never worse than any grid point.
    EXPECT_LE(proj.distance, grid.distance + 1e-9) << "trial " << trial;
    EXPECT_TRUE(simplex::is_unimodal_with_mode(proj.projection, ModeIndex(mode), 1e-8));
    // Idempotent.
    const auto twice = project_unimodal(proj.projection, ModeIndex(mode), CostMatrix::power(k));
    for (int i = 0; i < k; ++i) EXPECT_NEAR(twice.projection[i], proj.projection[i], 1e-7);
    EXPECT_GE(proj.plan.t.minCoeff(), -1e-12);
    EXPECT_NEAR(proj.plan.t.sum(), 1.0, 1e-8);
  }
}

TEST(Projection, DistanceVanishesExactlyOnTheModeSet) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + trial % 7;
    const auto q = oracle::random_distribution(rng, k);
    const auto cost = CostMatrix::power(k);
    double min_over_modes = std::numeric_limits<double>::infinity();
    for (int mode = 1; mode <= k; ++mode) {
      const double d = distance_to_unimodal_set(q, ModeIndex(mode), cost);
      EXPECT_GE(d, 0.0);
      EXPECT_EQ(d <= 1e-12, simplex::is_unimodal_with_mode(q, ModeIndex(mode)));
      min_over_modes = std::min(min_over_modes, d);
    }
    EXPECT_EQ(min_over_modes <= 1e-12, simplex::is_unimodal(q));
  }
}

TEST(Projection, SquaredCostStillUnimodal) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 3 + trial % 6;
    const int mode = 1 + trial % k;
    const auto q = oracle::random_distribution(rng, k);
    const auto proj = project_unimodal(q, ModeIndex(mode), CostMatrix::power(k, 2.0));
    EXPECT_TRUE(simplex::is_unimodal_with_mode(proj.projection, ModeIndex(mode), 1e-8));
    EXPECT_LE(proj.distance, wasserstein_distance(q, Distribution::one_hot(k, ModeIndex(mode)),
                                                  CostMatrix::power(k, 2.0))
                                     .value +
                                 1e-9);
  }
}
