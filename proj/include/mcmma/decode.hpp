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
// Test-time hard decoding: per-head monotonic frame selection with
// head-synchronous forcing. Heads scan frames in lockstep; once the first
// head activates at frame f1, the remaining heads get until f1 + epsilon
// before they are forced, which bounds the intra-layer boundary spread by
// epsilon at every output step.

#ifndef MCMMA_DECODE_HPP
#define MCMMA_DECODE_HPP

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "mcmma/matrix.hpp"

namespace mcmma {

struct HeadState {
  int head_id = 0;
  int prev_boundary = 0;  // 0 before the first output step
  bool activated = false;
  int boundary = -1;
};

enum class ForcedPosition { rightmost_selected, argmax_in_window };
enum class EndOfInput { force_to_T, emit_end };

struct DecodePolicy {
  int epsilon = 0;
  double threshold = 0.5;
  ForcedPosition forced_position = ForcedPosition::rightmost_selected;
  EndOfInput end_of_input = EndOfInput::force_to_T;
};

struct HeadStepOutcome {
  int boundary = -1;
  bool forced = false;
  int frames_scanned = 0;
};

struct StepOutcome {
  bool any_activated = false;  // false only when nothing activated and policy says stop
  std::vector<HeadStepOutcome> heads;
  int spread = 0;
};

struct StepRecord {
  int step = 0;       // 1-based output step
  int token = -1;     // emitted token id, -1 when no emitter drives the decode
  std::vector<int> boundaries;
  std::vector<std::uint8_t> forced;
  std::vector<int> frames_scanned;
  int spread = 0;
};

enum class Termination { end_token, max_length, input_exhausted };

struct DecodeTrace {
  int num_heads = 0;
  int num_frames = 0;
  DecodePolicy policy;
  std::vector<StepRecord> steps;
  Termination termination = Termination::max_length;
};

inline void advance_heads(std::vector<HeadState>& heads) {
  for (auto& h : heads) {
    h.prev_boundary = h.boundary;
    h.activated = false;
    h.boundary = -1;
  }
}

// One synchronized output step. `p` is called as p(head, step, frame) with a
// 0-based head index and 1-based frame, and must return a value in [0,1].
//
// Each head scans from its previous boundary; the first activation at frame
// f1 opens a window ending at min(f1 + epsilon, T). Heads that fail to
// activate inside the window are forced — to the rightmost selected frame or
// to the most probable frame inside the window, never left of their own
// previous boundary (monotonicity) and never left of f1 (spread bound).
template <class PProvider>
StepOutcome hsd_step(std::vector<HeadState>& heads, PProvider&& p, const DecodePolicy& policy,
                     int step, int num_frames) {
  const int M = static_cast<int>(heads.size());
  require(M >= 1, "hsd_step: need at least one head");
  require(num_frames >= 1, "hsd_step: input length must be >= 1");
  require(policy.epsilon >= 0, "hsd_step: epsilon must be >= 0");
  require(policy.threshold > 0.0 && policy.threshold < 1.0,
          "hsd_step: threshold must lie in (0,1)");

  std::vector<int> start(M);
  for (int m = 0; m < M; ++m) {
    require(!heads[m].activated, "hsd_step: head already activated at entry");
    require(heads[m].prev_boundary >= 0 && heads[m].prev_boundary <= num_frames,
            "hsd_step: previous boundary out of range");
    start[m] = std::max(1, heads[m].prev_boundary);
  }

  auto probe = [&](int m, int frame) {
    const double v = p(m, step, frame);
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("hsd_step: probability provider returned " +
                                  std::to_string(v) + " at head " + std::to_string(m + 1) +
                                  ", frame " + std::to_string(frame));
    }
    return v;
  };

  StepOutcome out;
  out.heads.assign(M, HeadStepOutcome{});

  int first_activation = -1;
  int remaining = M;
  const int scan_from = *std::min_element(start.begin(), start.end());
  for (int f = scan_from; f <= num_frames && remaining > 0; ++f) {
    for (int m = 0; m < M; ++m) {
      if (heads[m].activated || start[m] > f) continue;
      ++out.heads[m].frames_scanned;
      if (probe(m, f) >= policy.threshold) {
        heads[m].activated = true;
        heads[m].boundary = f;
        --remaining;
        if (first_activation < 0) first_activation = f;
      }
    }
    if (first_activation >= 0 && f >= std::min(first_activation + policy.epsilon, num_frames)) {
      break;
    }
  }

  if (first_activation < 0) {
    if (policy.end_of_input == EndOfInput::emit_end) {
      out.any_activated = false;
      return out;
    }
    for (int m = 0; m < M; ++m) {
      heads[m].activated = true;
      heads[m].boundary = num_frames;
      out.heads[m].forced = true;
    }
  } else {
    const int window_end = std::min(first_activation + policy.epsilon, num_frames);
    int rightmost = 0;
    for (int m = 0; m < M; ++m) {
      if (heads[m].activated) rightmost = std::max(rightmost, heads[m].boundary);
    }
    for (int m = 0; m < M; ++m) {
      if (heads[m].activated) continue;
      int b;
      if (policy.forced_position == ForcedPosition::rightmost_selected) {
        b = std::max(rightmost, start[m]);
      } else {
        const int lo = std::max(start[m], first_activation);
        if (lo > window_end) {
          b = start[m];
        } else {
          b = lo;
          double best = probe(m, lo);
          for (int j = lo + 1; j <= window_end; ++j) {
            const double v = probe(m, j);
            if (v > best) {
              best = v;
              b = j;
            }
          }
        }
      }
      heads[m].activated = true;
      heads[m].boundary = b;
      out.heads[m].forced = true;
    }
  }

  out.any_activated = true;
  int bmin = heads[0].boundary;
  int bmax = heads[0].boundary;
  for (int m = 0; m < M; ++m) {
    out.heads[m].boundary = heads[m].boundary;
    bmin = std::min(bmin, heads[m].boundary);
    bmax = std::max(bmax, heads[m].boundary);
  }
  out.spread = bmax - bmin;
  return out;
}

// Decode driven by scripted per-head probability matrices (L x T each).
// Emits no tokens; the toy model provides the emitting variant.
inline DecodeTrace decode_sequence(const std::vector<Matrix>& p_heads,
                                   const DecodePolicy& policy, int max_len) {
  const int M = static_cast<int>(p_heads.size());
  require(M >= 1, "decode_sequence: need at least one head");
  require(max_len >= 1, "decode_sequence: max_len must be >= 1");
  const int L = p_heads[0].rows();
  const int T = p_heads[0].cols();
  for (const auto& p : p_heads) {
    require(p.rows() == L && p.cols() == T, "decode_sequence: head shape mismatch");
  }

  DecodeTrace trace;
  trace.num_heads = M;
  trace.num_frames = T;
  trace.policy = policy;

  std::vector<HeadState> heads(M);
  for (int m = 0; m < M; ++m) heads[m].head_id = m;

  const int steps = std::min(max_len, L);
  auto provider = [&](int m, int step, int frame) { return p_heads[m](step - 1, frame - 1); };
  for (int i = 1; i <= steps; ++i) {
    StepOutcome oc = hsd_step(heads, provider, policy, i, T);
    if (!oc.any_activated) {
      trace.termination = Termination::input_exhausted;
      return trace;
    }
    StepRecord rec;
    rec.step = i;
    rec.spread = oc.spread;
    for (int m = 0; m < M; ++m) {
      rec.boundaries.push_back(oc.heads[m].boundary);
      rec.forced.push_back(oc.heads[m].forced ? 1 : 0);
      rec.frames_scanned.push_back(oc.heads[m].frames_scanned);
    }
    trace.steps.push_back(std::move(rec));
    advance_heads(heads);
  }
  trace.termination = Termination::max_length;
  return trace;
}

// Inference-time chunk context: softmax over the chunk energies of the
// width-w window ending at the selected boundary, applied to encoder states.
inline std::vector<double> chunk_context_inference(int boundary, const Matrix& encoder_states,
                                                   const std::vector<double>& chunk_energy_row,
                                                   int chunk_width) {
  const int T = encoder_states.rows();
  require(boundary >= 1 && boundary <= T, "chunk_context_inference: boundary out of range");
  require(chunk_width >= 1, "chunk_context_inference: width must be >= 1");
  require(static_cast<int>(chunk_energy_row.size()) == T,
          "chunk_context_inference: energy row length mismatch");

  const int lo = std::max(0, boundary - chunk_width);  // 0-based window start
  const int hi = boundary - 1;                         // 0-based boundary
  double emax = chunk_energy_row[lo];
  for (int j = lo + 1; j <= hi; ++j) emax = std::max(emax, chunk_energy_row[j]);
  double denom = 0.0;
  for (int j = lo; j <= hi; ++j) {
    require(std::isfinite(chunk_energy_row[j]), "chunk_context_inference: non-finite energy");
    denom += std::exp(chunk_energy_row[j] - emax);
  }
  std::vector<double> ctx(encoder_states.cols(), 0.0);
  for (int j = lo; j <= hi; ++j) {
    const double w = std::exp(chunk_energy_row[j] - emax) / denom;
    for (int c = 0; c < encoder_states.cols(); ++c) ctx[c] += w * encoder_states(j, c);
  }
  return ctx;
}

}  // namespace mcmma

#endif  // MCMMA_DECODE_HPP
