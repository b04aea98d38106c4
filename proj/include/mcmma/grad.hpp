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
// Hand-derived reverse-mode adjoints of the alignment calculus. The
// recurrences are small and fixed, so the reverse passes are written out
// explicitly and validated against central finite differences; no autodiff
// framework is involved.

#ifndef MCMMA_GRAD_HPP
#define MCMMA_GRAD_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "mcmma/align.hpp"
#include "mcmma/matrix.hpp"

namespace mcmma {

// Gradients of a scalar loss with respect to the attention inputs.
struct GradientBundle {
  std::vector<Matrix> d_p;  // per head, L x T
  std::vector<Matrix> d_u;  // per head, L x T chunk energies
  Matrix d_h;               // T x d encoder states
};

// Reverse of the expected-alignment recurrence. `d_alpha` is the cotangent
// of the full L x (T+1) alignment; the no-selection column is the complement
// of the row's frame mass, so its cotangent folds into every frame column
// with weight -1. Rows are processed last to first, passing the cotangent of
// row i-1 through the inner partial sums.
inline Matrix alpha_adjoint(const SelectionProbabilities& p, const AlignmentDistribution& alpha,
                            const std::vector<double>& alpha0, const Matrix& d_alpha) {
  const int L = p.steps();
  const int T = p.frames();
  require(alpha.steps() == L && alpha.frames() == T, "alpha_adjoint: alignment shape mismatch");
  require(d_alpha.rows() == L && d_alpha.cols() == T + 1, "alpha_adjoint: cotangent shape mismatch");
  require(static_cast<int>(alpha0.size()) == T, "alpha_adjoint: alpha0 length mismatch");
  require(d_alpha.all_finite(), "alpha_adjoint: non-finite cotangent");

  Matrix d_p(L, T);
  std::vector<double> carry(T, 0.0);       // cotangent on the previous row's frames
  std::vector<double> partial(T), partial_bar(T), g(T);
  for (int r = L - 1; r >= 0; --r) {
    const double* prev = (r == 0) ? alpha0.data() : alpha.values.row(r - 1);
    // rebuild the inner partial sums: partial[j] = prev[j] + partial[j-1]*(1-p[j-1])
    partial[0] = prev[0];
    for (int j = 1; j < T; ++j) {
      partial[j] = prev[j] + partial[j - 1] * (1.0 - p.values(r, j - 1));
    }
    const double fold = d_alpha(r, T);
    for (int j = 0; j < T; ++j) g[j] = d_alpha(r, j) - fold + carry[j];

    for (int j = T - 1; j >= 0; --j) {
      partial_bar[j] = g[j] * p.values(r, j) +
                       (j + 1 < T ? partial_bar[j + 1] * (1.0 - p.values(r, j)) : 0.0);
    }
    for (int j = 0; j < T; ++j) d_p(r, j) = g[j] * partial[j];
    for (int j = 1; j < T; ++j) d_p(r, j - 1) -= partial_bar[j] * partial[j - 1];
    for (int j = 0; j < T; ++j) carry[j] = partial_bar[j];
  }
  return d_p;
}

inline Matrix alpha_adjoint(const SelectionProbabilities& p, const AlignmentDistribution& alpha,
                            const Matrix& d_alpha) {
  return alpha_adjoint(p, alpha, one_hot_alpha0(p.frames()), d_alpha);
}

namespace detail {

// Shared scaffolding of the constrained adjoints: remainder cotangents are
// accumulated per (row, frame budget) and expanded onto alignment entries at
// the end, since remainder(r, x) = 1 - sum of the first x frame entries.
inline void expand_remainder_cotangents(const Matrix& remainder_bar, Matrix& d_alpha) {
  const int L = remainder_bar.rows();
  const int T = remainder_bar.cols() - 1;
  for (int r = 0; r < L; ++r) {
    double suffix = 0.0;
    for (int k = T; k >= 1; --k) {
      suffix += remainder_bar(r, k);
      d_alpha(r, k - 1) -= suffix;
    }
  }
}

}  // namespace detail

// Reverse of self_constrained / mutually_constrained: maps cotangents of the
// constrained alignment back to cotangents of the unconstrained per-head
// alignments. Output matrices are L x (T+1) with a zero no-selection column
// (the forward never reads it), ready to compose with alpha_adjoint.
inline std::vector<Matrix> constrained_adjoint(const std::vector<AlignmentDistribution>& alphas,
                                               const ConstraintConfig& cfg,
                                               const std::vector<Matrix>& d_constrained) {
  const int M = static_cast<int>(alphas.size());
  require(M >= 1, "constrained_adjoint: need at least one head");
  require(static_cast<int>(d_constrained.size()) == M,
          "constrained_adjoint: cotangent count mismatch");
  const int L = alphas[0].steps();
  const int T = alphas[0].frames();
  const int eps = cfg.epsilon;
  require(eps >= 0, "constrained_adjoint: epsilon must be >= 0");
  for (int m = 0; m < M; ++m) {
    require(alphas[m].steps() == L && alphas[m].frames() == T,
            "constrained_adjoint: head shape mismatch");
    require(d_constrained[m].rows() == L && d_constrained[m].cols() == T + 1,
            "constrained_adjoint: cotangent shape mismatch");
  }
  if (cfg.mode == ConstraintMode::mutually_constrained) {
    require(cfg.num_heads == M, "constrained_adjoint: num_heads does not match inputs");
  }

  std::vector<detail::PrefixMass> mass;
  mass.reserve(M);
  for (const auto& a : alphas) mass.emplace_back(a.values);

  std::vector<Matrix> d_alpha(M, Matrix(L, T + 1));
  std::vector<Matrix> remainder_bar(M, Matrix(L, T + 1));

  if (cfg.mode == ConstraintMode::mutually_constrained) {
    auto gate = [&](int m, int r, int x) {
      if (x <= 0) return 1.0;
      double q = 1.0;
      for (int o = 0; o < M; ++o) {
        if (o != m) q *= mass[o].remainder(r, x);
      }
      return q;
    };
    // gate cotangents per (head, frame budget) within one row
    Matrix gate_bar(M, T + 1);
    for (int r = 0; r < L; ++r) {
      gate_bar.fill(0.0);
      for (int m = 0; m < M; ++m) {
        const Matrix& gbar_in = d_constrained[m];
        for (int j = 1; j <= std::min(eps, T); ++j) {
          d_alpha[m](r, j - 1) += gbar_in(r, j - 1);
        }
        for (int j = eps + 1; j <= T; ++j) {
          const double gj = gbar_in(r, j - 1);
          if (gj == 0.0) continue;
          const double gate_now = gate(m, r, j - eps);
          const double gate_before = gate(m, r, j - eps - 1);
          const double rem_m = mass[m].remainder(r, j - 1);
          d_alpha[m](r, j - 1) += gj * gate_now;
          gate_bar(m, j - eps) += gj * (alphas[m].values(r, j - 1) - rem_m);
          if (j - eps - 1 >= 1) gate_bar(m, j - eps - 1) += gj * rem_m;
          if (j - 1 >= 1) remainder_bar[m](r, j - 1) += gj * (gate_before - gate_now);
        }
        const double gend = gbar_in(r, T);
        if (gend != 0.0) {
          remainder_bar[m](r, T) += gend * gate(m, r, T - eps);
          if (T - eps >= 1) gate_bar(m, T - eps) += gend * mass[m].remainder(r, T);
        }
      }
      // expand gate cotangents onto the other heads' remainders
      for (int m = 0; m < M; ++m) {
        for (int x = 1; x <= T; ++x) {
          const double gb = gate_bar(m, x);
          if (gb == 0.0) continue;
          for (int o = 0; o < M; ++o) {
            if (o == m) continue;
            double leave_out = 1.0;
            for (int k = 0; k < M; ++k) {
              if (k != m && k != o) leave_out *= mass[k].remainder(r, x);
            }
            remainder_bar[o](r, x) += gb * leave_out;
          }
        }
      }
    }
  } else {
    for (int m = 0; m < M; ++m) {
      const Matrix& gbar_in = d_constrained[m];
      for (int r = 0; r < L; ++r) {
        for (int j = 1; j <= std::min(eps, T); ++j) {
          d_alpha[m](r, j - 1) += gbar_in(r, j - 1);
        }
        for (int j = eps + 1; j <= T; ++j) {
          const double gj = gbar_in(r, j - 1);
          if (gj == 0.0) continue;
          const double rem_prev = r >= 1 ? mass[m].remainder(r - 1, j - eps) : 1.0;
          const double rem_now = mass[m].remainder(r, j - 1);
          const double align_prev =
              (r >= 1 && j - eps >= 1) ? alphas[m].values(r - 1, j - eps - 1) : 0.0;
          d_alpha[m](r, j - 1) += gj * rem_prev;
          if (r >= 1) remainder_bar[m](r - 1, j - eps) += gj * alphas[m].values(r, j - 1);
          if (j - 1 >= 1) remainder_bar[m](r, j - 1) += gj * align_prev;
          if (r >= 1) d_alpha[m](r - 1, j - eps - 1) += gj * rem_now;
        }
        const double gend = gbar_in(r, T);
        if (gend != 0.0) {
          const double rem_prev = r >= 1 ? mass[m].remainder(r - 1, T - eps) : 1.0;
          remainder_bar[m](r, T) += gend * rem_prev;
          if (r >= 1 && T - eps >= 1) {
            remainder_bar[m](r - 1, T - eps) += gend * mass[m].remainder(r, T);
          }
        }
      }
    }
  }

  for (int m = 0; m < M; ++m) {
    detail::expand_remainder_cotangents(remainder_bar[m], d_alpha[m]);
  }
  return d_alpha;
}

struct ChunkAdjoint {
  Matrix d_alignment;  // L x T frame-mass cotangent
  Matrix d_energies;   // L x T
};

// Reverse of chunk_attention. Recomputes each window softmax and applies the
// usual softmax Jacobian per window.
inline ChunkAdjoint chunk_attention_adjoint(const Matrix& alignment_frames,
                                            const Matrix& chunk_energies, int chunk_width,
                                            const Matrix& d_beta) {
  const int L = alignment_frames.rows();
  const int T = alignment_frames.cols();
  require(chunk_width >= 1, "chunk_attention_adjoint: width must be >= 1");
  require(chunk_energies.rows() == L && chunk_energies.cols() == T,
          "chunk_attention_adjoint: energy shape mismatch");
  require(d_beta.rows() == L && d_beta.cols() == T,
          "chunk_attention_adjoint: cotangent shape mismatch");

  ChunkAdjoint out{Matrix(L, T), Matrix(L, T)};
  std::vector<double> w(static_cast<std::size_t>(chunk_width));
  for (int r = 0; r < L; ++r) {
    for (int k = 0; k < T; ++k) {
      const int lo = std::max(0, k - chunk_width + 1);
      const int n = k - lo + 1;
      double emax = chunk_energies(r, lo);
      for (int j = lo + 1; j <= k; ++j) emax = std::max(emax, chunk_energies(r, j));
      double denom = 0.0;
      for (int j = lo; j <= k; ++j) {
        w[j - lo] = std::exp(chunk_energies(r, j) - emax);
        denom += w[j - lo];
      }
      for (int i = 0; i < n; ++i) w[i] /= denom;

      double weighted_cotangent = 0.0;  // sum_j w_j * d_beta_j
      for (int j = lo; j <= k; ++j) weighted_cotangent += w[j - lo] * d_beta(r, j);
      out.d_alignment(r, k) += weighted_cotangent;
      const double massk = alignment_frames(r, k);
      if (massk != 0.0) {
        for (int j = lo; j <= k; ++j) {
          out.d_energies(r, j) += massk * w[j - lo] * (d_beta(r, j) - weighted_cotangent);
        }
      }
    }
  }
  return out;
}

struct ContextAdjoint {
  Matrix d_weights;  // L x T
  Matrix d_states;   // T x d
};

// Reverse of expected_context.
inline ContextAdjoint context_adjoint(const Matrix& weights, const Matrix& encoder_states,
                                      const Matrix& d_context) {
  require(weights.cols() == encoder_states.rows(), "context_adjoint: shape mismatch");
  require(d_context.rows() == weights.rows() && d_context.cols() == encoder_states.cols(),
          "context_adjoint: cotangent shape mismatch");
  const int L = weights.rows();
  const int T = weights.cols();
  const int d = encoder_states.cols();
  ContextAdjoint out{Matrix(L, T), Matrix(T, d)};
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < T; ++j) {
      double acc = 0.0;
      for (int c = 0; c < d; ++c) acc += d_context(i, c) * encoder_states(j, c);
      out.d_weights(i, j) = acc;
      const double wij = weights(i, j);
      if (wij != 0.0) {
        for (int c = 0; c < d; ++c) out.d_states(j, c) += wij * d_context(i, c);
      }
    }
  }
  return out;
}

// Central-difference gradient check. Relative error per coordinate uses the
// denominator max(|analytic|, |numeric|, 1e-8); returns the maximum.
template <class Forward>
double finite_diff_check(Forward&& forward, std::vector<double> params,
                         const std::vector<double>& analytic_grad, double step) {
  require(step > 0.0, "finite_diff_check: step must be positive");
  require(params.size() == analytic_grad.size(), "finite_diff_check: size mismatch");
  double max_rel = 0.0;
  for (std::size_t c = 0; c < params.size(); ++c) {
    const double orig = params[c];
    params[c] = orig + step;
    const double fp = forward(params);
    params[c] = orig - step;
    const double fm = forward(params);
    params[c] = orig;
    require(std::isfinite(fp) && std::isfinite(fm), "finite_diff_check: non-finite forward value");
    const double numeric = (fp - fm) / (2.0 * step);
    const double denom =
        std::max(std::max(std::fabs(analytic_grad[c]), std::fabs(numeric)), 1e-8);
    max_rel = std::max(max_rel, std::fabs(numeric - analytic_grad[c]) / denom);
  }
  return max_rel;
}

}  // namespace mcmma

#endif  // MCMMA_GRAD_HPP
