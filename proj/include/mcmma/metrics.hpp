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
// Latency measurement: relative latency between hypothesis and reference
// boundary sequences, frame-to-time conversion, and per-step head spread.

#ifndef MCMMA_METRICS_HPP
#define MCMMA_METRICS_HPP

#include <algorithm>
#include <vector>

#include "mcmma/decode.hpp"
#include "mcmma/matrix.hpp"

namespace mcmma {

enum class BoundarySource { hypothesis, reference };

// Per-step boundary of the latest head (max over heads at each output step).
struct BoundarySequence {
  std::vector<int> boundaries;
  BoundarySource source = BoundarySource::hypothesis;
};

struct LatencyReport {
  double rel_frames = 0.0;
  double rel_ms = 0.0;
  int l_min = 0;
  std::vector<double> per_step_diffs;
};

inline double to_milliseconds(double rel_frames, int reduction_factor, double shift_ms) {
  require(reduction_factor >= 1, "to_milliseconds: reduction factor must be >= 1");
  require(shift_ms > 0.0, "to_milliseconds: frame shift must be positive");
  return rel_frames * reduction_factor * shift_ms;
}

// Mean signed boundary difference over the first min(|hyp|, |ref|) steps.
inline LatencyReport relative_latency(const BoundarySequence& hyp, const BoundarySequence& ref,
                                      int reduction_factor = 8, double shift_ms = 10.0) {
  require(!hyp.boundaries.empty(), "relative_latency: empty hypothesis");
  require(!ref.boundaries.empty(), "relative_latency: empty reference");
  LatencyReport rep;
  rep.l_min = static_cast<int>(std::min(hyp.boundaries.size(), ref.boundaries.size()));
  double sum = 0.0;
  for (int i = 0; i < rep.l_min; ++i) {
    const double d = static_cast<double>(hyp.boundaries[i]) - ref.boundaries[i];
    rep.per_step_diffs.push_back(d);
    sum += d;
  }
  rep.rel_frames = sum / rep.l_min;
  rep.rel_ms = to_milliseconds(rep.rel_frames, reduction_factor, shift_ms);
  return rep;
}

struct SpreadSummary {
  std::vector<int> per_step;
  int max_spread = 0;
};

inline SpreadSummary boundary_spread(const DecodeTrace& trace) {
  SpreadSummary s;
  for (const auto& rec : trace.steps) {
    s.per_step.push_back(rec.spread);
    s.max_spread = std::max(s.max_spread, rec.spread);
  }
  return s;
}

// Latest-head boundary per step, the quantity relative latency is defined on.
inline BoundarySequence latest_head_boundaries(const DecodeTrace& trace, BoundarySource source) {
  BoundarySequence seq;
  seq.source = source;
  for (const auto& rec : trace.steps) {
    seq.boundaries.push_back(*std::max_element(rec.boundaries.begin(), rec.boundaries.end()));
  }
  return seq;
}

}  // namespace mcmma

#endif  // MCMMA_METRICS_HPP
