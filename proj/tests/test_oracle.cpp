// Copyright 2026 The mcmma Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>

#include "mcmma/align.hpp"
#include "mcmma/oracle.hpp"
#include "mcmma/selfcheck.hpp"

namespace mcmma {
namespace {

Matrix random_probs(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = uni(rng);
  return m;
}

TEST(PathEnumeration, SingleBernoulli) {
  const double q = 0.3;
  SelectionProbabilities p{Matrix{{q}}, 1};
  const auto res = oracle::alpha_by_enumeration(p);
  EXPECT_NEAR(res.alignment.values(0, 0), q, 1e-15);
  EXPECT_NEAR(res.alignment.values(0, 1), 1.0 - q, 1e-15);
  EXPECT_NEAR(res.total_probability, 1.0, 1e-15);
}

TEST(PathEnumeration, CertainSelectionHasOnePath) {
  Matrix ones(3, 4);
  ones.fill(1.0);
  const auto res = oracle::alpha_by_enumeration(SelectionProbabilities{ones, 1});
  EXPECT_EQ(res.num_paths, 1u);
  EXPECT_NEAR(res.total_probability, 1.0, 1e-15);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(res.alignment.values(i, 0), 1.0);
}

TEST(PathEnumeration, CrossChecksHalfProbabilityExample) {
  SelectionProbabilities p{Matrix{{0.5, 0.5}}, 1};
  const auto res = oracle::alpha_by_enumeration(p);
  EXPECT_NEAR(res.alignment.values(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(res.alignment.values(0, 1), 0.25, 1e-15);
  EXPECT_NEAR(res.alignment.values(0, 2), 0.25, 1e-15);
}

TEST(PathEnumeration, TotalProbabilityIsInitialMass) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<int> frames(1, 7), steps(1, 4);
    const int T = frames(rng), L = steps(rng);
    SelectionProbabilities p{random_probs(L, T, rng), 1};
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> a0(T);
    double sum = 0.0;
    for (auto& v : a0) {
      v = uni(rng);
      sum += v;
    }
    const double mass = trial % 2 == 0 ? 1.0 : 0.5;
    for (auto& v : a0) v *= mass / sum;
    const auto res = oracle::alpha_by_enumeration(p, a0);
    EXPECT_NEAR(res.total_probability, mass, 1e-12);
  }
}

TEST(PathEnumeration, AgreesWithRecurrenceOnGrid) {
  const auto r = selfcheck::check_alpha_vs_enumeration(6, 3, 5, 17);
  EXPECT_TRUE(r.pass) << r.name << " deviation " << r.metric;
}

TEST(PathEnumeration, GuardsLargeInstances) {
  Matrix big(6, 11);
  big.fill(0.5);
  EXPECT_THROW(oracle::alpha_by_enumeration(SelectionProbabilities{big, 1}),
               std::invalid_argument);
}

TEST(DirectSum, SingleHeadIsAlignment) {
  std::mt19937_64 rng(6);
  SelectionProbabilities p{random_probs(3, 5, rng), 1};
  const auto alpha = expected_alignment(p);
  const auto out = oracle::constrained_by_direct_sum(
      {alpha}, ConstraintConfig{2, 1, ConstraintMode::mutually_constrained});
  for (int r = 0; r < 3; ++r) {
    for (int j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(out[0].values(r, j), alpha.values(r, j));
  }
}

TEST(DirectSum, ZeroEpsilonAgreesWithKernels) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<int> frames(1, 8), steps(1, 4), heads(1, 3);
    const int T = frames(rng), L = steps(rng), M = heads(rng);
    std::vector<AlignmentDistribution> alphas;
    for (int m = 0; m < M; ++m) {
      alphas.push_back(expected_alignment(SelectionProbabilities{random_probs(L, T, rng), m + 1}));
    }
    ConstraintConfig cfg{0, M, ConstraintMode::mutually_constrained};
    const auto fast = mutually_constrained(alphas, cfg);
    const auto ref = oracle::constrained_by_direct_sum(alphas, cfg);
    for (int m = 0; m < M; ++m) {
      EXPECT_LT(max_abs_diff(fast[m].values, ref[m].values), 1e-12);
    }
  }
}

TEST(DirectSum, RowSumsTelescopeToOne) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<int> frames(2, 8), steps(1, 3), heads(2, 3), eps_d(0, 3);
    const int T = frames(rng), L = steps(rng), M = heads(rng);
    std::vector<AlignmentDistribution> alphas;
    for (int m = 0; m < M; ++m) {
      alphas.push_back(expected_alignment(SelectionProbabilities{random_probs(L, T, rng), m + 1}));
    }
    const auto out = oracle::constrained_by_direct_sum(
        alphas, ConstraintConfig{eps_d(rng), M, ConstraintMode::mutually_constrained});
    for (const auto& d : out) {
      for (int r = 0; r < L; ++r) {
        double sum = 0.0;
        for (int c = 0; c <= T; ++c) sum += d.values(r, c);
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
    }
  }
}

TEST(MonteCarloHsd, CertainSelectionPinsEveryHeadAtFrameOne) {
  std::vector<Matrix> p(2, Matrix(3, 4));
  for (auto& h : p) h.fill(1.0);
  DecodePolicy policy;
  policy.epsilon = 2;
  const auto stats = oracle::monte_carlo_hsd(p, policy, 500, 42);
  EXPECT_EQ(stats.spread_violations, 0);
  EXPECT_EQ(stats.monotonicity_violations, 0);
  for (int i = 0; i < 3; ++i) {
    for (int m = 0; m < 2; ++m) EXPECT_DOUBLE_EQ(stats.mean_boundary(i, m), 1.0);
  }
  EXPECT_EQ(stats.spread_histogram[0], 3 * 500);
}

TEST(MonteCarloHsd, ZeroSelectionForcesToEnd) {
  std::vector<Matrix> p(2, Matrix(2, 5));  // all zero probabilities
  DecodePolicy policy;
  policy.epsilon = 1;
  const auto stats = oracle::monte_carlo_hsd(p, policy, 100, 7);
  for (int i = 0; i < 2; ++i) {
    for (int m = 0; m < 2; ++m) EXPECT_DOUBLE_EQ(stats.mean_boundary(i, m), 5.0);
  }
  EXPECT_EQ(stats.spread_violations, 0);
}

TEST(MonteCarloHsd, SpreadBoundedByEpsilonOnRandomInstances) {
  std::mt19937_64 rng(9);
  for (int eps : {1, 2, 4}) {
    std::vector<Matrix> p;
    for (int m = 0; m < 3; ++m) p.push_back(random_probs(3, 10, rng));
    DecodePolicy policy;
    policy.epsilon = eps;
    const auto stats = oracle::monte_carlo_hsd(p, policy, 5000, 1234);
    EXPECT_EQ(stats.spread_violations, 0) << "eps " << eps;
    EXPECT_EQ(stats.monotonicity_violations, 0) << "eps " << eps;
    for (std::size_t s = static_cast<std::size_t>(eps) + 1; s < stats.spread_histogram.size();
         ++s) {
      EXPECT_EQ(stats.spread_histogram[s], 0);
    }
  }
}

TEST(MonteCarloHsd, DeterministicGivenSeed) {
  std::mt19937_64 rng(10);
  std::vector<Matrix> p{random_probs(2, 6, rng), random_probs(2, 6, rng)};
  DecodePolicy policy;
  policy.epsilon = 2;
  const auto a = oracle::monte_carlo_hsd(p, policy, 300, 99);
  const auto b = oracle::monte_carlo_hsd(p, policy, 300, 99);
  EXPECT_EQ(a.mean_boundary.data(), b.mean_boundary.data());
  EXPECT_EQ(a.spread_histogram, b.spread_histogram);
}

}  // namespace
}  // namespace mcmma
