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
//
// Brute-force reference implementations, kept deliberately independent of
// the alignment kernels in align.hpp: full path enumeration for the
// expected alignment, literal-sum evaluation of the constrained variants,
// and Monte Carlo simulation of hard head-synchronous selection. These back
// the test suites and the `oracle-check` command; nothing else should call
// them on large inputs.

#ifndef MCMMA_ORACLE_HPP
#define MCMMA_ORACLE_HPP

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "mcmma/align.hpp"
#include "mcmma/decode.hpp"
#include "mcmma/matrix.hpp"

namespace mcmma::oracle {

// A hard monotonic selection history: boundaries[i] is the frame selected at
// output step i+1. A path shorter than L_out means the head ran off the end
// of the input at step boundaries.size()+1 and stays unselected afterwards.
struct MonotonicPath {
  std::vector<int> boundaries;  // 1-based frames, non-decreasing
};

struct EnumerationResult {
  AlignmentDistribution alignment;
  double total_probability = 0.0;  // mass of all complete paths, = sum of alpha0
  std::size_t num_paths = 0;
};

namespace detail {

struct PathEnumerator {
  const Matrix& p;  // L x T
  int L, T;
  Matrix marginal;                 // L x T frame mass
  double total = 0.0;
  std::size_t paths = 0;
  std::vector<int> current;        // boundaries so far (1-based)

  explicit PathEnumerator(const Matrix& probs)
      : p(probs), L(probs.rows()), T(probs.cols()), marginal(probs.rows(), probs.cols()) {}

  void settle(double w) {
    if (w == 0.0) return;  // zero-mass paths are pruned, not enumerated
    // a complete path: add its probability to every step's frame marginal
    for (std::size_t i = 0; i < current.size(); ++i) {
      marginal(static_cast<int>(i), current[i] - 1) += w;
    }
    total += w;
    ++paths;
  }

  // Extend the path at output step `step` (0-based) from 1-based frame `from`.
  void extend(int step, int from, double w) {
    if (step == L) {
      settle(w);
      return;
    }
    // option 1: select some frame t >= from at this step
    for (int t = from; t <= T; ++t) {
      double prob = w;
      for (int l = from; l < t; ++l) prob *= 1.0 - p(step, l - 1);
      prob *= p(step, t - 1);
      if (prob == 0.0) continue;
      current.push_back(t);
      extend(step + 1, t, prob);
      current.pop_back();
    }
    // option 2: run off the end of the input; every later step stays
    // unselected with probability 1, so the path terminates here
    double prob = w;
    for (int l = from; l <= T; ++l) prob *= 1.0 - p(step, l - 1);
    settle(prob);
  }
};

}  // namespace detail

// Expected alignment by exhaustive path enumeration. Exponential in L_out;
// guarded to desk-size instances. The no-selection column is filled with the
// complement of the row's frame mass, matching the calculus convention.
inline EnumerationResult alpha_by_enumeration(const SelectionProbabilities& p,
                                              const std::vector<double>& alpha0) {
  const int L = p.steps();
  const int T = p.frames();
  require(T <= 10 && L <= 5, "alpha_by_enumeration: instance too large for enumeration");
  require(static_cast<int>(alpha0.size()) == T, "alpha_by_enumeration: alpha0 length mismatch");

  detail::PathEnumerator en(p.values);
  for (int k = 1; k <= T; ++k) {
    if (alpha0[k - 1] == 0.0) continue;
    en.extend(0, k, alpha0[k - 1]);
  }

  EnumerationResult res;
  res.alignment.kind = AlignmentKind::unconstrained_alpha;
  res.alignment.values = Matrix(L, T + 1);
  for (int i = 0; i < L; ++i) {
    double mass = 0.0;
    for (int j = 0; j < T; ++j) {
      res.alignment.values(i, j) = en.marginal(i, j);
      mass += en.marginal(i, j);
    }
    res.alignment.values(i, T) = 1.0 - mass;
  }
  res.total_probability = en.total;
  res.num_paths = en.paths;
  return res;
}

inline EnumerationResult alpha_by_enumeration(const SelectionProbabilities& p) {
  return alpha_by_enumeration(p, one_hot_alpha0(p.frames()));
}

namespace detail {

// Literal partial sum: remaining mass of row r (0-based) after x frames.
inline double remainder_direct(const Matrix& align_values, int r, int x, int T) {
  if (r < 0) return 1.0;
  if (x <= 0) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= x && k <= T; ++k) s += align_values(r, k - 1);
  return 1.0 - s;
}

}  // namespace detail

// Constrained alignments evaluated exactly as written: remainders as explicit
// partial sums, cross-head gates as explicit products, fresh loops each time.
inline std::vector<AlignmentDistribution> constrained_by_direct_sum(
    const std::vector<AlignmentDistribution>& alphas, const ConstraintConfig& cfg) {
  const int M = static_cast<int>(alphas.size());
  require(M >= 1, "constrained_by_direct_sum: need at least one head");
  const int L = alphas[0].steps();
  const int T = alphas[0].frames();
  require(T <= 12, "constrained_by_direct_sum: instance too large");
  for (const auto& a : alphas) {
    require(a.steps() == L && a.frames() == T, "constrained_by_direct_sum: shape mismatch");
  }
  const int eps = cfg.epsilon;
  require(eps >= 0, "constrained_by_direct_sum: epsilon must be >= 0");

  std::vector<AlignmentDistribution> out(M);
  for (int m = 0; m < M; ++m) {
    out[m].kind = cfg.mode == ConstraintMode::mutually_constrained
                      ? AlignmentKind::mutually_constrained_delta
                      : AlignmentKind::self_constrained_gamma;
    out[m].values = Matrix(L, T + 1);

    for (int r = 0; r < L; ++r) {
      if (cfg.mode == ConstraintMode::mutually_constrained) {
        auto gate = [&](int x) {
          if (x <= 0) return 1.0;
          double q = 1.0;
          for (int o = 0; o < M; ++o) {
            if (o == m) continue;
            q *= detail::remainder_direct(alphas[o].values, r, x, T);
          }
          return q;
        };
        for (int j = 1; j <= T; ++j) {
          if (j <= eps) {
            out[m].values(r, j - 1) = alphas[m].values(r, j - 1);
          } else {
            const double t1 = alphas[m].values(r, j - 1) * gate(j - eps);
            const double t2 = detail::remainder_direct(alphas[m].values, r, j - 1, T) *
                              (gate(j - eps - 1) - gate(j - eps));
            out[m].values(r, j - 1) = t1 + t2;
          }
        }
        out[m].values(r, T) =
            detail::remainder_direct(alphas[m].values, r, T, T) * gate(T - eps);
      } else {
        for (int j = 1; j <= T; ++j) {
          if (j <= eps) {
            out[m].values(r, j - 1) = alphas[m].values(r, j - 1);
          } else {
            const double prev_align =
                (r - 1 < 0 || j - eps < 1) ? 0.0 : alphas[m].values(r - 1, j - eps - 1);
            const double t1 = alphas[m].values(r, j - 1) *
                              detail::remainder_direct(alphas[m].values, r - 1, j - eps, T);
            const double t2 =
                detail::remainder_direct(alphas[m].values, r, j - 1, T) * prev_align;
            out[m].values(r, j - 1) = t1 + t2;
          }
        }
        out[m].values(r, T) = detail::remainder_direct(alphas[m].values, r, T, T) *
                              detail::remainder_direct(alphas[m].values, r - 1, T - eps, T);
      }
    }
  }
  return out;
}

// Aggregates over Monte Carlo runs of the hard head-synchronous decode.
struct McHsdStats {
  std::int64_t n_samples = 0;
  int steps = 0;
  int num_heads = 0;
  Matrix mean_boundary;                    // L x M
  std::vector<std::int64_t> spread_histogram;  // index = per-step spread
  std::int64_t spread_violations = 0;      // spread > epsilon occurrences
  std::int64_t monotonicity_violations = 0;
  std::vector<Matrix> selection_frequency;  // per head, L x (T+1); col T+1 = forced-at-end
  double max_divergence_from_expected = 0.0;  // vs a supplied constrained alignment, if any
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over (seed, index) — stable across platforms
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Samples hard Bernoulli selection decisions per head/step/frame and runs the
// decode module's state machine on them. Validates the spread and
// monotonicity guarantees empirically; the per-frame selection frequencies
// are reported so the gap between the hard constrained process and the
// parallel training-time surrogate can be inspected (the surrogate is not
// expected to match, so nothing is asserted about the divergence).
inline McHsdStats monte_carlo_hsd(const std::vector<Matrix>& p_heads, const DecodePolicy& policy,
                                  std::int64_t n_samples, std::uint64_t seed,
                                  const std::vector<AlignmentDistribution>* expected = nullptr) {
  const int M = static_cast<int>(p_heads.size());
  require(M >= 1, "monte_carlo_hsd: need at least one head");
  require(n_samples >= 1, "monte_carlo_hsd: need at least one sample");
  const int L = p_heads[0].rows();
  const int T = p_heads[0].cols();
  for (const auto& p : p_heads) {
    require(p.rows() == L && p.cols() == T, "monte_carlo_hsd: head shape mismatch");
  }

  McHsdStats stats;
  stats.n_samples = n_samples;
  stats.steps = L;
  stats.num_heads = M;
  stats.mean_boundary = Matrix(L, M);
  stats.spread_histogram.assign(static_cast<std::size_t>(T) + 1, 0);
  stats.selection_frequency.assign(M, Matrix(L, T + 1));

  std::vector<Matrix> hard(M, Matrix(L, T));
  std::vector<HeadState> heads(M);
  for (std::int64_t s = 0; s < n_samples; ++s) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int m = 0; m < M; ++m) {
      for (int i = 0; i < L; ++i) {
        for (int j = 0; j < T; ++j) {
          hard[m](i, j) = uni(rng) < p_heads[m](i, j) ? 1.0 : 0.0;
        }
      }
    }

    for (int m = 0; m < M; ++m) heads[m] = HeadState{m, 0, false, -1};
    auto provider = [&](int m, int step, int frame) { return hard[m](step - 1, frame - 1); };
    for (int i = 1; i <= L; ++i) {
      StepOutcome oc = hsd_step(heads, provider, policy, i, T);
      if (!oc.any_activated) {
        for (int m = 0; m < M; ++m) stats.selection_frequency[m](i - 1, T) += 1.0;
        break;
      }
      if (oc.spread > policy.epsilon) ++stats.spread_violations;
      for (int m = 0; m < M; ++m) {
        if (oc.heads[m].boundary < heads[m].prev_boundary) ++stats.monotonicity_violations;
        stats.mean_boundary(i - 1, m) += oc.heads[m].boundary;
        stats.selection_frequency[m](i - 1, oc.heads[m].boundary - 1) += 1.0;
      }
      stats.spread_histogram[static_cast<std::size_t>(oc.spread)] += 1;
      advance_heads(heads);
    }
  }

  const double inv = 1.0 / static_cast<double>(n_samples);
  for (int i = 0; i < L; ++i) {
    for (int m = 0; m < M; ++m) stats.mean_boundary(i, m) *= inv;
  }
  for (int m = 0; m < M; ++m) {
    for (auto& v : stats.selection_frequency[m].data()) v *= inv;
  }
  if (expected != nullptr) {
    require(static_cast<int>(expected->size()) == M, "monte_carlo_hsd: expected size mismatch");
    for (int m = 0; m < M; ++m) {
      stats.max_divergence_from_expected =
          std::max(stats.max_divergence_from_expected,
                   max_abs_diff(stats.selection_frequency[m], (*expected)[m].values));
    }
  }
  return stats;
}

}  // namespace mcmma::oracle

#endif  // MCMMA_ORACLE_HPP
