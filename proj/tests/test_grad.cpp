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
#include "mcmma/grad.hpp"
#include "mcmma/selfcheck.hpp"

namespace mcmma {
namespace {

TEST(AlphaAdjoint, ZeroCotangentGivesZeroGradient) {
  SelectionProbabilities p{Matrix{{0.3, 0.6}, {0.2, 0.9}}, 1};
  const auto alpha = expected_alignment(p);
  const Matrix d_p = alpha_adjoint(p, alpha, Matrix(2, 3));
  for (double v : d_p.data()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(AlphaAdjoint, ScalarChainRule) {
  // T = 1, L = 1: alignment = p * a0, no-select = 1 - p * a0
  const double a0 = 0.8, pval = 0.4;
  SelectionProbabilities p{Matrix{{pval}}, 1};
  const auto alpha = expected_alignment(p, {a0});
  Matrix d_alpha{{3.0, 5.0}};
  const Matrix d_p = alpha_adjoint(p, alpha, {a0}, d_alpha);
  EXPECT_NEAR(d_p(0, 0), (3.0 - 5.0) * a0, 1e-15);
}

TEST(AlphaAdjoint, Linearity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(0.05, 0.95), cot(-1.0, 1.0);
  Matrix pm(3, 4);
  for (auto& v : pm.data()) v = uni(rng);
  SelectionProbabilities p{pm, 1};
  const auto alpha = expected_alignment(p);
  Matrix d1(3, 5), d2(3, 5);
  for (auto& v : d1.data()) v = cot(rng);
  for (auto& v : d2.data()) v = cot(rng);
  const double a = 1.7, b = -0.3;
  Matrix mix(3, 5);
  for (size_t i = 0; i < mix.data().size(); ++i) {
    mix.data()[i] = a * d1.data()[i] + b * d2.data()[i];
  }
  const Matrix g1 = alpha_adjoint(p, alpha, d1);
  const Matrix g2 = alpha_adjoint(p, alpha, d2);
  const Matrix gm = alpha_adjoint(p, alpha, mix);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      EXPECT_NEAR(gm(i, j), a * g1(i, j) + b * g2(i, j), 1e-12);
    }
  }
}

TEST(ConstrainedAdjoint, SingleHeadPassThrough) {
  // with one head the constrained alignment is the identity on frames and
  // the no-select column's cotangent spreads as -1 over the frames
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uni(0.1, 0.9), cot(-1.0, 1.0);
  Matrix pm(2, 4);
  for (auto& v : pm.data()) v = uni(rng);
  const auto alpha = expected_alignment(SelectionProbabilities{pm, 1});
  Matrix d_delta(2, 5);
  for (auto& v : d_delta.data()) v = cot(rng);
  ConstraintConfig cfg{1, 1, ConstraintMode::mutually_constrained};
  const auto d_alpha = constrained_adjoint({alpha}, cfg, {d_delta});
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 4; ++j) {
      EXPECT_NEAR(d_alpha[0](i, j), d_delta(i, j) - d_delta(i, 4), 1e-12);
    }
    EXPECT_DOUBLE_EQ(d_alpha[0](i, 4), 0.0);
  }
}

TEST(ConstrainedAdjoint, VacuousWindowPassThrough) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(0.1, 0.9), cot(-1.0, 1.0);
  const int T = 4;
  Matrix p1(2, T), p2(2, T);
  for (auto& v : p1.data()) v = uni(rng);
  for (auto& v : p2.data()) v = uni(rng);
  const auto a1 = expected_alignment(SelectionProbabilities{p1, 1});
  const auto a2 = expected_alignment(SelectionProbabilities{p2, 2});
  std::vector<Matrix> d_delta(2, Matrix(2, T + 1));
  for (auto& d : d_delta) {
    for (auto& v : d.data()) v = cot(rng);
  }
  ConstraintConfig cfg{T, 2, ConstraintMode::mutually_constrained};
  const auto d_alpha = constrained_adjoint({a1, a2}, cfg, d_delta);
  for (int m = 0; m < 2; ++m) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < T; ++j) {
        EXPECT_NEAR(d_alpha[m](i, j), d_delta[m](i, j) - d_delta[m](i, T), 1e-12);
      }
    }
  }
}

TEST(ConstrainedAdjoint, Linearity) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> uni(0.1, 0.9), cot(-1.0, 1.0);
  const int T = 5, L = 2, M = 2;
  std::vector<AlignmentDistribution> alphas;
  for (int m = 0; m < M; ++m) {
    Matrix pm(L, T);
    for (auto& v : pm.data()) v = uni(rng);
    alphas.push_back(expected_alignment(SelectionProbabilities{pm, m + 1}));
  }
  ConstraintConfig cfg{1, M, ConstraintMode::mutually_constrained};
  std::vector<Matrix> d1(M, Matrix(L, T + 1)), d2(M, Matrix(L, T + 1)), mix(M, Matrix(L, T + 1));
  for (int m = 0; m < M; ++m) {
    for (size_t i = 0; i < d1[m].data().size(); ++i) {
      d1[m].data()[i] = cot(rng);
      d2[m].data()[i] = cot(rng);
      mix[m].data()[i] = 0.5 * d1[m].data()[i] + 2.0 * d2[m].data()[i];
    }
  }
  const auto g1 = constrained_adjoint(alphas, cfg, d1);
  const auto g2 = constrained_adjoint(alphas, cfg, d2);
  const auto gm = constrained_adjoint(alphas, cfg, mix);
  for (int m = 0; m < M; ++m) {
    for (size_t i = 0; i < gm[m].data().size(); ++i) {
      EXPECT_NEAR(gm[m].data()[i], 0.5 * g1[m].data()[i] + 2.0 * g2[m].data()[i], 1e-12);
    }
  }
}

TEST(FiniteDiff, ConstantFunctionHasZeroError) {
  auto forward = [](const std::vector<double>&) { return 3.5; };
  const double err = finite_diff_check(forward, {1.0, 2.0}, {0.0, 0.0}, 1e-5);
  EXPECT_DOUBLE_EQ(err, 0.0);
}

TEST(FiniteDiff, QuadraticIsExactForCentralDifferences) {
  std::vector<double> x{0.3, -1.2, 2.0};
  auto forward = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return s;
  };
  std::vector<double> analytic{2 * x[0], 2 * x[1], 2 * x[2]};
  EXPECT_LE(finite_diff_check(forward, x, analytic, 1e-5), 1e-9);
}

TEST(FiniteDiff, RejectsBadStep) {
  auto forward = [](const std::vector<double>&) { return 0.0; };
  EXPECT_THROW(finite_diff_check(forward, {1.0}, {0.0}, 0.0), std::invalid_argument);
}

TEST(GradChecks, KernelAdjointsMatchFiniteDifferences) {
  for (const auto& r : {selfcheck::gradcheck_alpha(5, 101),
                        selfcheck::gradcheck_constrained(ConstraintMode::mutually_constrained, 5, 102),
                        selfcheck::gradcheck_constrained(ConstraintMode::self_constrained, 5, 103),
                        selfcheck::gradcheck_chunk(5, 104),
                        selfcheck::gradcheck_context(5, 105)}) {
    EXPECT_TRUE(r.pass) << r.name << ": " << r.metric;
  }
}

TEST(GradChecks, PipelineAdjointMatchesFiniteDifferences) {
  const auto r = selfcheck::gradcheck_pipeline(3, 106);
  EXPECT_TRUE(r.pass) << r.name << ": " << r.metric;
}

}  // namespace
}  // namespace mcmma
