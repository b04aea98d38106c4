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
// Expected-alignment calculus for monotonic multihead attention:
// the unconstrained alignment recurrence, its self-constrained and
// mutually-constrained variants, chunkwise soft attention, and expected
// contexts. Everything here is a pure function of its inputs.

#ifndef MCMMA_ALIGN_HPP
#define MCMMA_ALIGN_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "mcmma/matrix.hpp"

namespace mcmma {

// Per-head matrix of frame-selection probabilities, L_out x T.
struct SelectionProbabilities {
  Matrix values;
  int head_index = 1;  // 1-based head id, carried for diagnostics

  int steps() const { return values.rows(); }
  int frames() const { return values.cols(); }
};

enum class AlignmentKind {
  unconstrained_alpha,
  self_constrained_gamma,
  mutually_constrained_delta,
};

// Per-head alignment distribution, L_out x (T+1). Column T+1 holds the
// probability of reaching the end of input without selecting a frame.
struct AlignmentDistribution {
  Matrix values;
  AlignmentKind kind = AlignmentKind::unconstrained_alpha;

  int steps() const { return values.rows(); }
  int frames() const { return values.cols() - 1; }
};

enum class ConstraintMode { self_constrained, mutually_constrained };

struct ConstraintConfig {
  int epsilon = 0;   // waiting threshold in frames, >= 0
  int num_heads = 1; // M >= 1
  ConstraintMode mode = ConstraintMode::mutually_constrained;
};

// Chunkwise soft attention weights, L_out x T. Row mass is bounded by the
// alignment mass on frames 1..T.
struct ChunkAttention {
  Matrix values;
  int chunk_width = 16;
};

// Two algebraically equal routes through the alignment recurrence.
// `direct` is the literal O(T^2)-per-row double sum and serves as the
// in-library reference; `scan` is the O(T)-per-row cumulative-product form
// used everywhere by default.
enum class AlphaRoute { direct, scan };

namespace detail {

// Floor for running products of (1-p): keeps the scan route's divisions
// finite when a selection probability hits exactly 1.
inline constexpr double kCumprodFloor = 1e-30;

// Rounding guard: complement-style quantities may dip below zero by at
// most this much before it is treated as a real defect.
inline constexpr double kNegTol = 1e-12;

inline double clamp_rounding(double x) {
  return (x < 0.0 && x > -kNegTol) ? 0.0 : x;
}

inline void validate_probabilities(const Matrix& p) {
  for (int i = 0; i < p.rows(); ++i) {
    for (int j = 0; j < p.cols(); ++j) {
      const double v = p(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("selection probability out of [0,1] at step " +
                                    std::to_string(i + 1) + ", frame " + std::to_string(j + 1));
      }
    }
  }
}

inline void validate_initial_row(const std::vector<double>& alpha0, int frames) {
  require(static_cast<int>(alpha0.size()) == frames,
          "initial alignment row: expected " + std::to_string(frames) + " entries");
  double sum = 0.0;
  for (double v : alpha0) {
    require(v >= 0.0, "initial alignment row: negative entry");
    sum += v;
  }
  require(sum <= 1.0 + 1e-9, "initial alignment row: mass exceeds 1");
}

// Partial-sum table for one alignment matrix: prefix(r, x) = sum of the
// first x frame entries of row r. Backs the remainder lookups below.
class PrefixMass {
 public:
  explicit PrefixMass(const Matrix& alignment)  // L x (T+1), frame cols used
      : frames_(alignment.cols() - 1), prefix_(alignment.rows(), alignment.cols()) {
    for (int r = 0; r < alignment.rows(); ++r) {
      double acc = 0.0;
      prefix_(r, 0) = 0.0;
      for (int x = 1; x <= frames_; ++x) {
        acc += alignment(r, x - 1);
        prefix_(r, x) = acc;
      }
    }
  }

  // Remaining mass after the first x frames of row r (0-based row).
  // x <= 0 means nothing consumed yet; rows before the first step do not
  // exist here — callers apply the B_{0,.} = 1 convention themselves.
  double remainder(int r, int x) const {
    if (x <= 0) return 1.0;
    const double b = 1.0 - prefix_(r, std::min(x, frames_));
    return clamp_rounding(b);
  }

 private:
  int frames_;
  Matrix prefix_;
};

}  // namespace detail

// One-hot initial alignment at frame 1 — the conventional start state of a
// monotonic attention head.
inline std::vector<double> one_hot_alpha0(int frames) {
  require(frames >= 1, "one_hot_alpha0: frames must be >= 1");
  std::vector<double> a(frames, 0.0);
  a[0] = 1.0;
  return a;
}

// Expected alignment recurrence. Row i is built from row i-1:
//   align(i,j) = p(i,j) * sum_k prev(k) * prod_{l=k..j-1} (1 - p(i,l)),
// and column T+1 is the complement of the row's frame mass.
inline AlignmentDistribution expected_alignment(const SelectionProbabilities& p,
                                                const std::vector<double>& alpha0,
                                                AlphaRoute route = AlphaRoute::scan) {
  const int L = p.steps();
  const int T = p.frames();
  require(L >= 1 && T >= 1, "expected_alignment: empty probability matrix");
  detail::validate_probabilities(p.values);
  detail::validate_initial_row(alpha0, T);

  AlignmentDistribution out;
  out.kind = AlignmentKind::unconstrained_alpha;
  out.values = Matrix(L, T + 1);

  std::vector<double> prev = alpha0;
  std::vector<double> cumprod(T + 1);
  for (int i = 0; i < L; ++i) {
    double row_mass = 0.0;
    if (route == AlphaRoute::direct) {
      for (int j = 0; j < T; ++j) {
        // inner sum expanded literally, running the skip product backwards
        double acc = prev[j];
        double prod = 1.0;
        for (int k = j - 1; k >= 0; --k) {
          prod *= 1.0 - p.values(i, k);
          acc += prev[k] * prod;
        }
        const double a = p.values(i, j) * acc;
        out.values(i, j) = a;
        row_mass += a;
      }
    } else {
      cumprod[0] = 1.0;
      for (int j = 0; j < T; ++j) {
        cumprod[j + 1] = std::max(cumprod[j] * (1.0 - p.values(i, j)), detail::kCumprodFloor);
      }
      double scaled_prefix = 0.0;  // sum_k prev(k) / cumprod(k)
      for (int j = 0; j < T; ++j) {
        scaled_prefix += prev[j] / cumprod[j];
        const double a = p.values(i, j) * cumprod[j] * scaled_prefix;
        out.values(i, j) = a;
        row_mass += a;
      }
    }
    out.values(i, T) = detail::clamp_rounding(1.0 - row_mass);
    for (int j = 0; j < T; ++j) prev[j] = out.values(i, j);
  }
  return out;
}

inline AlignmentDistribution expected_alignment(const SelectionProbabilities& p,
                                                AlphaRoute route = AlphaRoute::scan) {
  return expected_alignment(p, one_hot_alpha0(p.frames()), route);
}

// Probability that the head has not selected any of frames 1..j by output
// step i. Step 0 refers to the fictitious row before the first output and
// is 1 by convention, as is any frame index <= 0.
inline double remainder_mass(const AlignmentDistribution& alignment, int step, int frame) {
  const int L = alignment.steps();
  const int T = alignment.frames();
  require(step >= 0 && step <= L, "remainder_mass: step out of range");
  require(frame <= T, "remainder_mass: frame index beyond input length");
  if (step == 0 || frame <= 0) return 1.0;
  double sum = 0.0;
  for (int k = 0; k < frame; ++k) sum += alignment.values(step - 1, k);
  return detail::clamp_rounding(1.0 - sum);
}

// Self-constrained alignment: each head must select within `epsilon` frames
// of its own previous-step boundary. Computed from the unconstrained
// alignment only; row conventions for the step before the first output are
// remainder = 1 and alignment = 0.
inline AlignmentDistribution self_constrained(const AlignmentDistribution& alpha,
                                              const ConstraintConfig& cfg) {
  require(cfg.mode == ConstraintMode::self_constrained, "self_constrained: wrong mode");
  require(cfg.epsilon >= 0, "self_constrained: epsilon must be >= 0");
  const int L = alpha.steps();
  const int T = alpha.frames();
  const int eps = cfg.epsilon;

  detail::PrefixMass mass(alpha.values);
  auto rem = [&](int r, int x) { return r < 0 ? 1.0 : mass.remainder(r, x); };
  auto prev_align = [&](int r, int x) {  // alignment at 1-based frame x, rows < 0 vanish
    return (r < 0 || x < 1 || x > T) ? 0.0 : alpha.values(r, x - 1);
  };

  AlignmentDistribution out;
  out.kind = AlignmentKind::self_constrained_gamma;
  out.values = Matrix(L, T + 1);
  for (int r = 0; r < L; ++r) {
    for (int j = 1; j <= std::min(eps, T); ++j) {
      out.values(r, j - 1) = alpha.values(r, j - 1);
    }
    for (int j = eps + 1; j <= T; ++j) {
      const double in_window = alpha.values(r, j - 1) * rem(r - 1, j - eps);
      const double forced = rem(r, j - 1) * prev_align(r - 1, j - eps);
      out.values(r, j - 1) = detail::clamp_rounding(in_window + forced);
    }
    out.values(r, T) = detail::clamp_rounding(rem(r, T) * rem(r - 1, T - eps));
  }
  return out;
}

// Mutually-constrained alignment: a head's selection of frame j is gated by
// whether every other head of the layer is still within j - epsilon. The
// gate for head m at frame budget x is the product of the other heads'
// remainder masses at x (1 for x <= 0, and 1 for a single head).
inline std::vector<AlignmentDistribution> mutually_constrained(
    const std::vector<AlignmentDistribution>& alphas, const ConstraintConfig& cfg) {
  require(cfg.mode == ConstraintMode::mutually_constrained, "mutually_constrained: wrong mode");
  require(cfg.epsilon >= 0, "mutually_constrained: epsilon must be >= 0");
  const int M = static_cast<int>(alphas.size());
  require(M >= 1, "mutually_constrained: need at least one head");
  require(cfg.num_heads == M, "mutually_constrained: num_heads does not match inputs");
  const int L = alphas[0].steps();
  const int T = alphas[0].frames();
  for (const auto& a : alphas) {
    require(a.steps() == L && a.frames() == T, "mutually_constrained: head shape mismatch");
  }
  const int eps = cfg.epsilon;

  std::vector<detail::PrefixMass> mass;
  mass.reserve(M);
  for (const auto& a : alphas) mass.emplace_back(a.values);

  auto other_gate = [&](int m, int r, int x) {
    if (x <= 0) return 1.0;
    double q = 1.0;
    for (int o = 0; o < M; ++o) {
      if (o != m) q *= mass[o].remainder(r, x);
    }
    return q;
  };

  std::vector<AlignmentDistribution> out(M);
  for (int m = 0; m < M; ++m) {
    out[m].kind = AlignmentKind::mutually_constrained_delta;
    out[m].values = Matrix(L, T + 1);
    for (int r = 0; r < L; ++r) {
      for (int j = 1; j <= std::min(eps, T); ++j) {
        out[m].values(r, j - 1) = alphas[m].values(r, j - 1);
      }
      for (int j = eps + 1; j <= T; ++j) {
        const double gate = other_gate(m, r, j - eps);
        const double gate_before = other_gate(m, r, j - eps - 1);
        const double in_window = alphas[m].values(r, j - 1) * gate;
        const double forced = mass[m].remainder(r, j - 1) * (gate_before - gate);
        out[m].values(r, j - 1) = detail::clamp_rounding(in_window + forced);
      }
      out[m].values(r, T) =
          detail::clamp_rounding(mass[m].remainder(r, T) * other_gate(m, r, T - eps));
    }
  }
  return out;
}

// Expected chunkwise attention: each frame's alignment mass is spread over a
// softmax of the chunk energies on the width-w window ending at that frame.
// Row mass is preserved exactly (up to rounding).
inline ChunkAttention chunk_attention(const AlignmentDistribution& alignment,
                                      const Matrix& chunk_energies, int chunk_width) {
  const int L = alignment.steps();
  const int T = alignment.frames();
  require(chunk_width >= 1, "chunk_attention: width must be >= 1");
  require(chunk_energies.rows() == L && chunk_energies.cols() == T,
          "chunk_attention: energy shape mismatch");
  require(chunk_energies.all_finite(), "chunk_attention: non-finite energy");

  ChunkAttention out;
  out.chunk_width = chunk_width;
  out.values = Matrix(L, T);
  for (int r = 0; r < L; ++r) {
    for (int k = 0; k < T; ++k) {
      const double massk = alignment.values(r, k);
      if (massk == 0.0) continue;
      const int lo = std::max(0, k - chunk_width + 1);
      double emax = chunk_energies(r, lo);
      for (int j = lo + 1; j <= k; ++j) emax = std::max(emax, chunk_energies(r, j));
      double denom = 0.0;
      for (int j = lo; j <= k; ++j) denom += std::exp(chunk_energies(r, j) - emax);
      for (int j = lo; j <= k; ++j) {
        out.values(r, j) += massk * std::exp(chunk_energies(r, j) - emax) / denom;
      }
    }
  }
  return out;
}

// Weighted sum of encoder states under a frame-weight matrix.
inline Matrix expected_context(const Matrix& weights, const Matrix& encoder_states) {
  require(weights.cols() == encoder_states.rows(),
          "expected_context: weight length does not match encoder states");
  const int L = weights.rows();
  const int T = weights.cols();
  const int d = encoder_states.cols();
  Matrix ctx(L, d);
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < T; ++j) {
      const double w = weights(i, j);
      if (w == 0.0) continue;
      for (int c = 0; c < d; ++c) ctx(i, c) += w * encoder_states(j, c);
    }
  }
  return ctx;
}

inline Matrix expected_context(const ChunkAttention& weights, const Matrix& encoder_states) {
  return expected_context(weights.values, encoder_states);
}

// Alignment overload drops the no-selection column.
inline Matrix expected_context(const AlignmentDistribution& alignment,
                               const Matrix& encoder_states) {
  const int L = alignment.steps();
  const int T = alignment.frames();
  Matrix frames_only(L, T);
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < T; ++j) frames_only(i, j) = alignment.values(i, j);
  }
  return expected_context(frames_only, encoder_states);
}

}  // namespace mcmma

#endif  // MCMMA_ALIGN_HPP
