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

namespace mcmma {
namespace {

Matrix constant_matrix(int rows, int cols, double v) {
  Matrix m(rows, cols);
  m.fill(v);
  return m;
}

Matrix random_probs(int rows, int cols, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> uni(lo, hi);
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = uni(rng);
  return m;
}

std::vector<double> random_distribution(int n, std::mt19937_64& rng, double total = 1.0) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> a(n);
  double sum = 0.0;
  for (auto& v : a) {
    v = uni(rng);
    sum += v;
  }
  for (auto& v : a) v *= total / sum;
  return a;
}

TEST(ExpectedAlignment, CertainSelectionNeverAdvances) {
  // with p = 1 everywhere the head reselects frame 1 at every step
  SelectionProbabilities p{constant_matrix(3, 4, 1.0), 1};
  const auto a = expected_alignment(p);
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(a.values(i, 0), 1.0);
    for (int j = 1; j <= 4; ++j) EXPECT_DOUBLE_EQ(a.values(i, j), 0.0);
  }
}

TEST(ExpectedAlignment, ZeroSelectionPutsAllMassInNoSelectColumn) {
  SelectionProbabilities p{constant_matrix(2, 3, 0.0), 1};
  const auto a = expected_alignment(p);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(a.values(i, j), 0.0);
    EXPECT_DOUBLE_EQ(a.values(i, 3), 1.0);
  }
}

TEST(ExpectedAlignment, HalfProbabilitySingleStep) {
  SelectionProbabilities p{constant_matrix(1, 2, 0.5), 1};
  const auto a = expected_alignment(p);
  EXPECT_NEAR(a.values(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(a.values(0, 1), 0.25, 1e-15);
  EXPECT_NEAR(a.values(0, 2), 0.25, 1e-15);
}

TEST(ExpectedAlignment, RoutesAgree) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> frames(1, 30), steps(1, 5);
    const int T = frames(rng), L = steps(rng);
    SelectionProbabilities p{random_probs(L, T, rng), 1};
    const auto a0 = random_distribution(T, rng, trial % 2 == 0 ? 1.0 : 0.6);
    const auto scan = expected_alignment(p, a0, AlphaRoute::scan);
    const auto direct = expected_alignment(p, a0, AlphaRoute::direct);
    EXPECT_LT(max_abs_diff(scan.values, direct.values), 1e-10);
  }
}

TEST(ExpectedAlignment, RoutesAgreeWithSaturatedProbabilities) {
  // exact zeros and ones exercise the cumulative-product floor
  SelectionProbabilities p{Matrix{{1.0, 0.5, 0.0}, {0.0, 1.0, 0.5}}, 1};
  const auto scan = expected_alignment(p, AlphaRoute::scan);
  const auto direct = expected_alignment(p, AlphaRoute::direct);
  EXPECT_LT(max_abs_diff(scan.values, direct.values), 1e-10);
}

TEST(ExpectedAlignment, ReproducesLiteralRecurrence) {
  // one level of the recurrence evaluated literally on the previous row
  // must reproduce the stored row
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> frames(1, 8), steps(1, 4);
    const int T = frames(rng), L = steps(rng);
    SelectionProbabilities p{random_probs(L, T, rng), 1};
    const auto a0 = random_distribution(T, rng);
    const auto a = expected_alignment(p, a0);
    for (int i = 0; i < L; ++i) {
      for (int j = 0; j < T; ++j) {
        double acc = 0.0;
        for (int k = 0; k <= j; ++k) {
          double prod = 1.0;
          for (int l = k; l < j; ++l) prod *= 1.0 - p.values(i, l);
          acc += (i == 0 ? a0[k] : a.values(i - 1, k)) * prod;
        }
        EXPECT_NEAR(a.values(i, j), p.values(i, j) * acc, 1e-12);
      }
    }
  }
}

TEST(ExpectedAlignment, RejectsBadInputs) {
  SelectionProbabilities bad{Matrix{{0.5, 1.5}}, 1};
  EXPECT_THROW(expected_alignment(bad), std::invalid_argument);

  SelectionProbabilities ok{Matrix{{0.5, 0.5}}, 1};
  EXPECT_THROW(expected_alignment(ok, {0.7, 0.7}), std::invalid_argument);  // mass > 1
  EXPECT_THROW(expected_alignment(ok, {1.0}), std::invalid_argument);       // wrong length
  EXPECT_THROW(expected_alignment(ok, {-0.1, 0.5}), std::invalid_argument);
}

TEST(RemainderMass, Conventions) {
  AlignmentDistribution a;
  a.values = Matrix{{0.5, 0.25, 0.25}};  // T = 2
  EXPECT_DOUBLE_EQ(remainder_mass(a, 1, 0), 1.0);
  EXPECT_DOUBLE_EQ(remainder_mass(a, 1, -3), 1.0);
  EXPECT_DOUBLE_EQ(remainder_mass(a, 0, 2), 1.0);  // row before the first step
  EXPECT_NEAR(remainder_mass(a, 1, 2), 0.25, 1e-15);
  EXPECT_THROW(remainder_mass(a, 1, 3), std::invalid_argument);
  EXPECT_THROW(remainder_mass(a, 2, 1), std::invalid_argument);
}

TEST(RemainderMass, FullMassRowGivesZero) {
  AlignmentDistribution a;
  a.values = Matrix{{0.5, 0.3, 0.2, 0.0}};  // T = 3, frames sum to 1
  EXPECT_NEAR(remainder_mass(a, 1, 3), 0.0, 1e-15);
}

TEST(SelfConstrained, VacuousWindowReturnsAlignment) {
  std::mt19937_64 rng(21);
  SelectionProbabilities p{random_probs(3, 5, rng), 1};
  const auto alpha = expected_alignment(p);
  for (int eps : {5, 7, 50}) {
    const auto gamma =
        self_constrained(alpha, ConstraintConfig{eps, 1, ConstraintMode::self_constrained});
    EXPECT_LT(max_abs_diff(gamma.values, alpha.values), 1e-12);
  }
}

TEST(SelfConstrained, FirstStepEqualsAlignment) {
  // conventions for the step before the first output make row 1 pass through
  std::mt19937_64 rng(22);
  SelectionProbabilities p{random_probs(2, 6, rng), 1};
  const auto alpha = expected_alignment(p);
  const auto gamma =
      self_constrained(alpha, ConstraintConfig{2, 1, ConstraintMode::self_constrained});
  for (int j = 0; j <= 6; ++j) {
    EXPECT_NEAR(gamma.values(0, j), alpha.values(0, j), 1e-12);
  }
}

TEST(SelfConstrained, MatchesDirectSumOracle) {
  SelectionProbabilities p{constant_matrix(3, 4, 0.5), 1};
  const auto alpha = expected_alignment(p);
  ConstraintConfig cfg{1, 1, ConstraintMode::self_constrained};
  const auto gamma = self_constrained(alpha, cfg);
  const auto ref = oracle::constrained_by_direct_sum({alpha}, cfg);
  EXPECT_LT(max_abs_diff(gamma.values, ref[0].values), 1e-12);
}

TEST(SelfConstrained, RejectsWrongMode) {
  SelectionProbabilities p{constant_matrix(1, 2, 0.5), 1};
  const auto alpha = expected_alignment(p);
  EXPECT_THROW(
      self_constrained(alpha, ConstraintConfig{1, 1, ConstraintMode::mutually_constrained}),
      std::invalid_argument);
}

TEST(MutuallyConstrained, SingleHeadReduction) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> frames(1, 8), steps(1, 4), eps_d(0, 8);
    SelectionProbabilities p{random_probs(steps(rng), frames(rng), rng), 1};
    const auto alpha = expected_alignment(p);
    const auto delta = mutually_constrained(
        {alpha}, ConstraintConfig{eps_d(rng), 1, ConstraintMode::mutually_constrained});
    EXPECT_LT(max_abs_diff(delta[0].values, alpha.values), 1e-12);
  }
}

TEST(MutuallyConstrained, VacuousWindow) {
  std::mt19937_64 rng(32);
  const int T = 6;
  SelectionProbabilities p1{random_probs(3, T, rng), 1};
  SelectionProbabilities p2{random_probs(3, T, rng), 2};
  const auto a1 = expected_alignment(p1);
  const auto a2 = expected_alignment(p2);
  const auto delta =
      mutually_constrained({a1, a2}, ConstraintConfig{T, 2, ConstraintMode::mutually_constrained});
  EXPECT_LT(max_abs_diff(delta[0].values, a1.values), 1e-12);
  EXPECT_LT(max_abs_diff(delta[1].values, a2.values), 1e-12);
}

TEST(MutuallyConstrained, MatchesDirectSumOracle) {
  SelectionProbabilities p{constant_matrix(2, 3, 0.5), 1};
  const auto alpha = expected_alignment(p);
  ConstraintConfig cfg{1, 2, ConstraintMode::mutually_constrained};
  const auto delta = mutually_constrained({alpha, alpha}, cfg);
  const auto ref = oracle::constrained_by_direct_sum({alpha, alpha}, cfg);
  for (int m = 0; m < 2; ++m) {
    EXPECT_LT(max_abs_diff(delta[m].values, ref[m].values), 1e-12);
    for (int r = 0; r < 2; ++r) {
      double sum = 0.0;
      for (int c = 0; c <= 3; ++c) sum += delta[m].values(r, c);
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(MutuallyConstrained, RowsNormalizeEvenWithPartialInitialMass) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> frames(1, 9), steps(1, 4), heads(1, 3), eps_d(0, 4);
    const int T = frames(rng), L = steps(rng), M = heads(rng), eps = eps_d(rng);
    std::vector<AlignmentDistribution> alphas;
    for (int m = 0; m < M; ++m) {
      SelectionProbabilities p{random_probs(L, T, rng), m + 1};
      alphas.push_back(expected_alignment(p, random_distribution(T, rng, 0.4)));
    }
    const auto deltas = mutually_constrained(
        alphas, ConstraintConfig{eps, M, ConstraintMode::mutually_constrained});
    for (const auto& d : deltas) {
      for (int r = 0; r < L; ++r) {
        double sum = 0.0;
        for (int c = 0; c <= T; ++c) {
          EXPECT_GE(d.values(r, c), -1e-12);
          sum += d.values(r, c);
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
      }
    }
  }
}

TEST(MutuallyConstrained, ZeroMassPropagation) {
  // the other head commits all its mass at frame 2; beyond frame 2 + eps the
  // constrained head cannot select at all
  const int T = 6, L = 1, eps = 1, committed_frame = 2;
  std::mt19937_64 rng(34);
  SelectionProbabilities pm{random_probs(L, T, rng), 1};
  const auto alpha_m = expected_alignment(pm);

  AlignmentDistribution committed;
  committed.values = Matrix(L, T + 1);
  committed.values(0, committed_frame - 1) = 1.0;

  const auto delta = mutually_constrained(
      {alpha_m, committed}, ConstraintConfig{eps, 2, ConstraintMode::mutually_constrained});
  for (int j = committed_frame + eps + 1; j <= T; ++j) {
    EXPECT_NEAR(delta[0].values(0, j - 1), 0.0, 1e-15) << "frame " << j;
  }
  EXPECT_NEAR(delta[0].values(0, T), 0.0, 1e-15);  // no-select gate is zero too
}

TEST(MutuallyConstrained, RejectsShapeMismatch) {
  SelectionProbabilities p1{constant_matrix(2, 3, 0.5), 1};
  SelectionProbabilities p2{constant_matrix(2, 4, 0.5), 2};
  const auto a1 = expected_alignment(p1);
  const auto a2 = expected_alignment(p2);
  EXPECT_THROW(mutually_constrained(
                   {a1, a2}, ConstraintConfig{1, 2, ConstraintMode::mutually_constrained}),
               std::invalid_argument);
  EXPECT_THROW(
      mutually_constrained({a1}, ConstraintConfig{1, 2, ConstraintMode::mutually_constrained}),
      std::invalid_argument);
}

TEST(ChunkAttention, WidthOneIsIdentityOnFrames) {
  std::mt19937_64 rng(41);
  SelectionProbabilities p{random_probs(2, 5, rng), 1};
  const auto alpha = expected_alignment(p);
  Matrix u = random_probs(2, 5, rng);
  const auto beta = chunk_attention(alpha, u, 1);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(beta.values(i, j), alpha.values(i, j), 1e-15);
  }
}

TEST(ChunkAttention, OneHotUniformEnergySplitsEvenly) {
  AlignmentDistribution a;
  a.values = Matrix(1, 5);  // T = 4
  a.values(0, 2) = 1.0;     // all mass at frame 3
  const auto beta = chunk_attention(a, Matrix(1, 4), 2);
  EXPECT_NEAR(beta.values(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(beta.values(0, 2), 0.5, 1e-15);
}

TEST(ChunkAttention, HandExpandedCase) {
  AlignmentDistribution a;
  a.values = Matrix{{0.5, 0.25, 0.25, 0.0}};  // frames [0.5, 0.25, 0.25], T = 3
  const auto beta = chunk_attention(a, Matrix(1, 3), 2);
  // double sum expanded by hand with uniform energies
  EXPECT_NEAR(beta.values(0, 0), 0.625, 1e-15);
  EXPECT_NEAR(beta.values(0, 1), 0.25, 1e-15);
  EXPECT_NEAR(beta.values(0, 2), 0.125, 1e-15);
}

TEST(ChunkAttention, PreservesRowMass) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> frames(1, 12), steps(1, 4), widths(1, 6);
    const int T = frames(rng), L = steps(rng), w = widths(rng);
    SelectionProbabilities p{random_probs(L, T, rng), 1};
    const auto alpha = expected_alignment(p, random_distribution(T, rng, 0.8));
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    Matrix u(L, T);
    for (auto& v : u.data()) v = uni(rng);
    const auto beta = chunk_attention(alpha, u, w);
    for (int i = 0; i < L; ++i) {
      double bmass = 0.0, amass = 0.0;
      for (int j = 0; j < T; ++j) {
        EXPECT_GE(beta.values(i, j), 0.0);
        bmass += beta.values(i, j);
        amass += alpha.values(i, j);
      }
      EXPECT_NEAR(bmass, amass, 1e-9);
      EXPECT_LE(bmass, 1.0 + 1e-9);
    }
  }
}

TEST(ChunkAttention, RejectsBadInputs) {
  AlignmentDistribution a;
  a.values = Matrix(1, 4);
  EXPECT_THROW(chunk_attention(a, Matrix(1, 3), 0), std::invalid_argument);
  Matrix bad(1, 3);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(chunk_attention(a, bad, 2), std::invalid_argument);
  EXPECT_THROW(chunk_attention(a, Matrix(2, 3), 2), std::invalid_argument);
}

TEST(ExpectedContext, SelectsAndMixes) {
  Matrix h{{2.0}, {4.0}};
  EXPECT_DOUBLE_EQ(expected_context(Matrix{{1.0, 0.0}}, h)(0, 0), 2.0);  // one-hot
  EXPECT_DOUBLE_EQ(expected_context(Matrix{{0.0, 0.0}}, h)(0, 0), 0.0);  // zero weights
  EXPECT_DOUBLE_EQ(expected_context(Matrix{{0.5, 0.5}}, h)(0, 0), 3.0);
  EXPECT_THROW(expected_context(Matrix{{0.5, 0.25, 0.25}}, h), std::invalid_argument);
}

}  // namespace
}  // namespace mcmma
