#include <gtest/gtest.h>

#include "cskl/capped_simplex.hpp"
#include "cskl/error.hpp"
#include "oracles.hpp"

namespace cskl {
namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

TEST(ToptValue, Examples) {
  const Vector v = vec({3, 1, 2});
  EXPECT_EQ(topt_value(v, 2), 5.0);
  EXPECT_EQ(topt_value(v, 1), 3.0);
  EXPECT_EQ(topt_value(v, 3), 6.0);
  EXPECT_THROW(topt_value(v, 0), InvalidArgument);
  EXPECT_THROW(topt_value(v, 4), InvalidArgument);
}

TEST(ToptGamma, Examples) {
  const Vector g = topt_gamma(vec({5, 3, 4, 1}), 2);
  EXPECT_EQ(g, vec({1, 0, 1, 0}));
  EXPECT_EQ(g.dot(vec({5, 3, 4, 1})), 9.0);
  const Vector tie = topt_gamma(vec({4, 4, 4}), 2);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(tie[i], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(tie.dot(vec({4, 4, 4})), 8.0, 1e-12);
  EXPECT_THROW(topt_gamma(vec({1, 2}), 3), InvalidArgument);
}

TEST(ToptGamma, MatchesEnumerationOracleAndTheoremStructure) {
  oracle::Rng rng(1);
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = oracle::uniform_int(rng, 1, 12);
    const int t = oracle::uniform_int(rng, 1, n);
    Vector v = oracle::random_vector(rng, n, 0.0, 10.0);
    if (rep % 4 == 0)  // force ties
      for (Eigen::Index i = 0; i < n; ++i) v[i] = std::round(v[i] / 3.0);
    const Vector g = topt_gamma(v, t);
    const double lp = oracle::capped_simplex_lp_max(v, t);
    EXPECT_NEAR(g.dot(v), lp, 1e-9);
    EXPECT_NEAR(topt_value(v, t), lp, 1e-9);
    EXPECT_NEAR(g.sum(), t, 1e-12);
    Vector sorted = v;
    std::sort(sorted.data(), sorted.data() + n, std::greater<>());
    const double vt = sorted[t - 1];
    for (Eigen::Index i = 0; i < n; ++i) {
      if (v[i] > vt) EXPECT_EQ(g[i], 1.0);
      if (v[i] < vt) EXPECT_EQ(g[i], 0.0);
      EXPECT_GE(g[i], 0.0);
      EXPECT_LE(g[i], 1.0);
    }
  }
}

TEST(ToptGamma, ScaleInvariantAndFractionalOnlyOnTies) {
  oracle::Rng rng(2);
  for (int rep = 0; rep < 300; ++rep) {
    const int n = oracle::uniform_int(rng, 1, 10);
    const int t = oracle::uniform_int(rng, 1, n);
    Vector v = oracle::random_vector(rng, n, 0.0, 4.0);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = std::round(v[i]);
    const double c = oracle::uniform(rng, 0.01, 100.0);
    const Vector g = topt_gamma(v, t);
    EXPECT_EQ(topt_gamma(Vector(c * v), t), g);
    Vector sorted = v;
    std::sort(sorted.data(), sorted.data() + n, std::greater<>());
    const auto ties = (v.array() == sorted[t - 1]).count();
    const auto fractional = ((g.array() > 1e-9) && (g.array() < 1.0 - 1e-9)).count();
    EXPECT_LE(fractional, ties);
  }
}

TEST(Pivots, CentralAndLargest) {
  EXPECT_EQ(central_pivot(vec({0.1, 0.45, 0.55, 1.0})), 1u);
  EXPECT_EQ(central_pivot(vec({0.0, 1.0})), 0u);
  EXPECT_EQ(largest_pivot(vec({0.2, 0.7, 0.7})), 1u);
}

TEST(DescentDirection, HandComputedExample) {
  const Vector gamma = vec({0.5, 0.3, 0.2});
  const Vector phi = vec({-1, -2, -3});
  const Vector d = descent_direction(gamma, 0, phi);
  EXPECT_EQ(d, vec({-3, 1, 2}));
  EXPECT_EQ(d.sum(), 0.0);
  EXPECT_EQ(phi.dot(d), -5.0);
}

TEST(DescentDirection, BoundRules) {
  // gamma_m = 0 with phi_m - phi_mu > 0 stays put.
  const Vector at_zero = descent_direction(vec({0.0, 0.5, 0.5}), 1, vec({2.0, 1.0, 0.5}));
  EXPECT_EQ(at_zero[0], 0.0);
  // gamma_m = 1 with phi_m - phi_mu < 0 stays put.
  const Vector at_one = descent_direction(vec({1.0, 0.5, 0.5}), 1, vec({-2.0, 1.0, 0.5}));
  EXPECT_EQ(at_one[0], 0.0);
  EXPECT_NEAR(at_one.sum(), 0.0, 1e-15);
}

TEST(DescentDirection, ConstantPhiIsStationary) {
  const Vector d = descent_direction(vec({0.2, 0.3, 0.5}), 2, Vector::Constant(3, -1.7));
  EXPECT_EQ(d, Vector::Zero(3));
}

TEST(MaxStep, Examples) {
  const auto b = max_step(vec({0.5, 0.3, 0.2}), vec({-3, 1, 2}));
  ASSERT_TRUE(b);
  EXPECT_NEAR(b->max_step, 1.0 / 6.0, 1e-15);
  EXPECT_EQ(b->index, 0u);
  EXPECT_FALSE(b->hits_upper);
  const auto pair = max_step(vec({0.0, 1.0}), vec({1, -1}));
  ASSERT_TRUE(pair);
  EXPECT_EQ(pair->max_step, 1.0);
  const auto tight = max_step(vec({0.2, 0.9}), vec({0.5, -0.5}));
  EXPECT_NEAR(tight->max_step, 1.6, 1e-15);
  EXPECT_FALSE(max_step(vec({0.2, 0.8}), Vector::Zero(2)));
}

TEST(LpDirection, Examples) {
  const Vector gamma = vec({0.5, 0.3, 0.2});
  const Vector phi = vec({-1, -2, -3});
  const Vector d = lp_direction(gamma, phi);
  EXPECT_NEAR((d - vec({-0.5, -0.3, 0.8})).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  EXPECT_NEAR(phi.dot(d), -1.3, 1e-15);
  EXPECT_EQ(lp_direction(gamma, Vector::Constant(3, 2.0)), Vector::Zero(3));
}

Vector random_feasible(oracle::Rng& rng, int n) {
  const int t = oracle::uniform_int(rng, 1, n);
  Vector g = oracle::random_interior_capped(rng, n, t);
  // Push some coordinates onto the bounds while keeping the sum.
  for (int k = 0; k < n / 2; ++k) {
    const auto i = static_cast<Eigen::Index>(oracle::uniform_int(rng, 0, n - 1));
    const auto j = static_cast<Eigen::Index>(oracle::uniform_int(rng, 0, n - 1));
    if (i == j) continue;
    const double move = std::min(g[i], 1.0 - g[j]);
    g[i] -= move;
    g[j] += move;
  }
  return g;
}

TEST(Directions, PropertiesOnRandomFeasiblePairs) {
  oracle::Rng rng(3);
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = oracle::uniform_int(rng, 2, 10);
    const Vector gamma = random_feasible(rng, n);
    Vector phi = oracle::random_vector(rng, n, -5.0, 0.0);
    if (rep % 5 == 0)
      for (Eigen::Index i = 0; i < n; ++i) phi[i] = std::round(phi[i]);
    const Vector rg = descent_direction(gamma, central_pivot(gamma), phi);
    const Vector lp = lp_direction(gamma, phi);
    for (const Vector* d : {&rg, &lp}) {
      EXPECT_LE(std::abs(d->sum()), 1e-10);
      EXPECT_LE(phi.dot(*d), 1e-12);
      if (const auto b = max_step(gamma, *d)) {
        const Vector end = gamma + b->max_step * *d;
        EXPECT_GE(end.minCoeff(), -1e-12);
        EXPECT_LE(end.maxCoeff(), 1.0 + 1e-12);
        EXPECT_NEAR(end.sum(), gamma.sum(), 1e-10);
      }
    }
    EXPECT_GE(lp.minCoeff() + 0.0, (-gamma).minCoeff() - 1e-12);
    EXPECT_LE(((gamma + lp).array() - 1.0).maxCoeff(), 1e-12);
    EXPECT_GE((gamma + lp).minCoeff(), -1e-12);
  }
}

TEST(LpDirection, MatchesEnumerationOracle) {
  oracle::Rng rng(4);
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = oracle::uniform_int(rng, 1, 6);
    Vector gamma = oracle::random_vector(rng, n, 0.0, 1.0);
    if (rep % 3 == 0) gamma = random_feasible(rng, n);
    Vector phi = oracle::random_vector(rng, n, -3.0, 3.0);
    if (rep % 4 == 0)
      for (Eigen::Index i = 0; i < n; ++i) phi[i] = std::round(phi[i]);
    const Vector d = lp_direction(gamma, phi);
    // min phi'D over the box around gamma = min phi'x over {sum x = sum gamma, 0 <= x <= 1} - phi'gamma.
    const double expected = oracle::box_sum_lp_min(phi, gamma.sum()) - phi.dot(gamma);
    EXPECT_NEAR(phi.dot(d), expected, 1e-9);
  }
}

}  // namespace
}  // namespace cskl
