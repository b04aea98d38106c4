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
// Desk-scale demonstration harness: a synthetic monotonic transduction task,
// a tiny encoder-decoder whose cross-attention heads are monotonic attention
// mechanisms (optionally mutually constrained), HeadDrop, a deterministic
// training loop with hand-written backprop, and the epsilon-sweep evaluation
// producing latency/quality trade-off rows.

#ifndef MCMMA_TOY_HPP
#define MCMMA_TOY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mcmma/align.hpp"
#include "mcmma/decode.hpp"
#include "mcmma/grad.hpp"
#include "mcmma/matrix.hpp"
#include "mcmma/metrics.hpp"
#include "mcmma/oracle.hpp"

namespace mcmma::toy {

using oracle::derive_seed;

// Copy task: each target token is smeared over `upsample` consecutive input
// frames (with additive Gaussian noise); the gold boundary of output i is
// the last frame of its span.
struct SyntheticTask {
  int vocab_size = 10;
  int frames = 32;   // T = length * upsample
  int length = 8;    // L
  int upsample = 4;  // r
  double noise_std = 0.1;
  std::uint64_t seed = 1;
  int feature_dim = 8;
};

struct Utterance {
  Matrix features;  // T x feature_dim
  std::vector<int> targets;
  std::vector<int> gold_boundaries;  // 1-based, i-th entry = i*upsample
};

inline void validate_task(const SyntheticTask& t) {
  require(t.vocab_size >= 2, "synthetic task: vocab must have at least 2 tokens");
  require(t.length >= 1 && t.upsample >= 1, "synthetic task: bad length/upsample");
  require(t.frames == t.length * t.upsample,
          "synthetic task: frames must equal length * upsample");
  require(t.noise_std >= 0.0, "synthetic task: negative noise std");
  require(t.feature_dim >= 1, "synthetic task: feature_dim must be >= 1");
}

// Deterministic dataset generation. The per-token input embedding table
// depends only on the task seed; utterances are drawn from (seed, stream,
// index) so train/eval splits never overlap.
inline std::vector<Utterance> gen_synthetic(const SyntheticTask& task, int count,
                                            std::uint64_t stream = 0) {
  validate_task(task);
  require(count >= 1, "gen_synthetic: count must be >= 1");

  Matrix table(task.vocab_size, task.feature_dim);
  {
    std::mt19937_64 rng(derive_seed(task.seed, 0x7ab1e));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : table.data()) v = normal(rng);
  }

  std::vector<Utterance> data;
  data.reserve(count);
  for (int u = 0; u < count; ++u) {
    std::mt19937_64 rng(
        derive_seed(derive_seed(task.seed, stream), static_cast<std::uint64_t>(u)));
    std::uniform_int_distribution<int> tok(0, task.vocab_size - 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    Utterance utt;
    utt.features = Matrix(task.frames, task.feature_dim);
    for (int i = 0; i < task.length; ++i) {
      utt.targets.push_back(tok(rng));
      utt.gold_boundaries.push_back((i + 1) * task.upsample);
    }
    for (int t = 0; t < task.frames; ++t) {
      const int token = utt.targets[t / task.upsample];
      for (int c = 0; c < task.feature_dim; ++c) {
        utt.features(t, c) = table(token, c) + task.noise_std * normal(rng);
      }
    }
    data.push_back(std::move(utt));
  }
  return data;
}

struct ToyDims {
  int feature_dim = 8;
  int model_dim = 16;
  int vocab = 10;
  int max_steps = 8;
  int max_frames = 32;
  int num_heads = 2;
  int chunk_width = 4;
};

struct HeadParams {
  Matrix query_w, key_w;  // model_dim x model_dim
  double energy_bias = 0.0;
  Matrix chunk_query_w, chunk_key_w;
  double chunk_bias = 0.0;
};

// All learnable tensors. token_embedding has vocab+1 rows; the extra row is
// the begin-of-sequence symbol fed at the first decoder step.
struct ToyModelParams {
  ToyDims dims;
  Matrix encoder_w;               // feature_dim x model_dim
  std::vector<double> encoder_b;  // model_dim
  Matrix encoder_positional;      // max_frames x model_dim, keys need frame identity
  Matrix token_embedding;         // (vocab+1) x model_dim
  Matrix positional;              // max_steps x model_dim
  Matrix decoder_w;               // model_dim x model_dim
  std::vector<double> decoder_b;  // model_dim
  std::vector<HeadParams> heads;
  Matrix output_w;               // model_dim x vocab
  std::vector<double> output_b;  // vocab

  int bos_token() const { return dims.vocab; }

  template <class Params, class Fn>
  static void visit(Params& p, Fn&& fn) {
    fn(p.encoder_w.data().data(), p.encoder_w.data().size());
    fn(p.encoder_b.data(), p.encoder_b.size());
    fn(p.encoder_positional.data().data(), p.encoder_positional.data().size());
    fn(p.token_embedding.data().data(), p.token_embedding.data().size());
    fn(p.positional.data().data(), p.positional.data().size());
    fn(p.decoder_w.data().data(), p.decoder_w.data().size());
    fn(p.decoder_b.data(), p.decoder_b.size());
    for (auto& h : p.heads) {
      fn(h.query_w.data().data(), h.query_w.data().size());
      fn(h.key_w.data().data(), h.key_w.data().size());
      fn(&h.energy_bias, 1);
      fn(h.chunk_query_w.data().data(), h.chunk_query_w.data().size());
      fn(h.chunk_key_w.data().data(), h.chunk_key_w.data().size());
      fn(&h.chunk_bias, 1);
    }
    fn(p.output_w.data().data(), p.output_w.data().size());
    fn(p.output_b.data(), p.output_b.size());
  }

  std::size_t num_params() const {
    std::size_t n = 0;
    visit(*this, [&](const double*, std::size_t len) { n += len; });
    return n;
  }

  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(num_params());
    visit(*this, [&](const double* d, std::size_t len) { out.insert(out.end(), d, d + len); });
    return out;
  }

  void load_flat(const std::vector<double>& flat) {
    require(flat.size() == num_params(), "load_flat: size mismatch");
    std::size_t pos = 0;
    visit(*this, [&](double* d, std::size_t len) {
      std::copy(flat.begin() + pos, flat.begin() + pos + len, d);
      pos += len;
    });
  }

  static ToyModelParams shaped(const ToyDims& dims) {
    ToyModelParams p;
    p.dims = dims;
    p.encoder_w = Matrix(dims.feature_dim, dims.model_dim);
    p.encoder_b.assign(dims.model_dim, 0.0);
    p.encoder_positional = Matrix(dims.max_frames, dims.model_dim);
    p.token_embedding = Matrix(dims.vocab + 1, dims.model_dim);
    p.positional = Matrix(dims.max_steps, dims.model_dim);
    p.decoder_w = Matrix(dims.model_dim, dims.model_dim);
    p.decoder_b.assign(dims.model_dim, 0.0);
    p.heads.resize(dims.num_heads);
    for (auto& h : p.heads) {
      h.query_w = Matrix(dims.model_dim, dims.model_dim);
      h.key_w = Matrix(dims.model_dim, dims.model_dim);
      h.chunk_query_w = Matrix(dims.model_dim, dims.model_dim);
      h.chunk_key_w = Matrix(dims.model_dim, dims.model_dim);
    }
    p.output_w = Matrix(dims.model_dim, dims.vocab);
    p.output_b.assign(dims.vocab, 0.0);
    return p;
  }

  static ToyModelParams init(const ToyDims& dims, std::uint64_t seed) {
    ToyModelParams p = shaped(dims);
    std::mt19937_64 rng(derive_seed(seed, 0x1417));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto fill_scaled = [&](Matrix& m, int fan_in) {
      const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (auto& v : m.data()) v = s * normal(rng);
    };
    fill_scaled(p.encoder_w, dims.feature_dim);
    fill_scaled(p.encoder_positional, dims.model_dim);
    fill_scaled(p.token_embedding, dims.model_dim);
    fill_scaled(p.positional, dims.model_dim);
    fill_scaled(p.decoder_w, dims.model_dim);
    for (auto& h : p.heads) {
      fill_scaled(h.query_w, dims.model_dim);
      fill_scaled(h.key_w, dims.model_dim);
      h.energy_bias = -1.0;  // start selective: low selection probability everywhere
      fill_scaled(h.chunk_query_w, dims.model_dim);
      fill_scaled(h.chunk_key_w, dims.model_dim);
      h.chunk_bias = 0.0;
    }
    fill_scaled(p.output_w, dims.model_dim);
    return p;
  }

  void scale(double s) {
    visit(*this, [&](double* d, std::size_t len) {
      for (std::size_t i = 0; i < len; ++i) d[i] *= s;
    });
  }

  // this += s * other
  void axpy(double s, const ToyModelParams& other) {
    std::size_t pos = 0;
    const std::vector<double> flat = other.flatten();
    visit(*this, [&](double* d, std::size_t len) {
      for (std::size_t i = 0; i < len; ++i) d[i] += s * flat[pos + i];
      pos += len;
    });
  }
};

enum class TrainMode { mma, mcmma_delta, mcmma_gamma };

inline std::string train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::mma: return "mma";
    case TrainMode::mcmma_delta: return "mcmma_delta";
    case TrainMode::mcmma_gamma: return "mcmma_gamma";
  }
  return "?";
}

struct HeadMask {
  std::vector<std::uint8_t> active;
  int reinstated = -1;  // head revived because every draw dropped

  int num_active() const {
    int n = 0;
    for (auto a : active) n += a ? 1 : 0;
    return n;
  }
};

// Independent per-head drop; a layer never loses all its heads — one is
// reinstated uniformly at random if every draw came up dropped.
inline HeadMask headdrop_mask(int num_heads, double p_drop, std::mt19937_64& rng) {
  require(num_heads >= 1, "headdrop_mask: need at least one head");
  require(p_drop >= 0.0 && p_drop < 1.0, "headdrop_mask: p_drop must lie in [0,1)");
  HeadMask mask;
  mask.active.resize(num_heads);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  int survivors = 0;
  for (int m = 0; m < num_heads; ++m) {
    mask.active[m] = uni(rng) < p_drop ? 0 : 1;
    survivors += mask.active[m];
  }
  if (survivors == 0) {
    std::uniform_int_distribution<int> pick(0, num_heads - 1);
    mask.reinstated = pick(rng);
    mask.active[mask.reinstated] = 1;
  }
  return mask;
}

struct TrainConfig {
  TrainMode mode = TrainMode::mcmma_delta;
  int epsilon_train = 4;
  double headdrop_prob = 0.5;
  double learning_rate = 1.0;
  double lr_decay = 1.0;  // per-epoch factor applied past decay_start
  int decay_start = 1 << 30;
  double grad_clip = 5.0;      // global-norm clip per batch; <= 0 disables
  double weight_decay = 0.0;   // decoupled shrink per batch
  double energy_bias_init = -1.0;
  int epochs = 200;
  int batch_size = 8;
  std::uint64_t seed = 1;
  int num_train = 48;
  int num_eval = 16;
  int model_dim = 16;
  int num_heads = 2;
  int chunk_width = 4;
  double energy_noise_std = 0.0;  // optional pre-sigmoid Gaussian noise
};

inline void validate_train_config(const TrainConfig& cfg) {
  if (cfg.mode != TrainMode::mma) {
    require(cfg.epsilon_train >= 1, "train config: constrained modes need epsilon >= 1");
  }
  require(cfg.epsilon_train >= 0, "train config: epsilon must be >= 0");
  require(cfg.headdrop_prob >= 0.0 && cfg.headdrop_prob < 1.0,
          "train config: headdrop probability must lie in [0,1)");
  require(cfg.epochs >= 1 && cfg.batch_size >= 1, "train config: bad epochs/batch");
  require(cfg.num_train >= 1 && cfg.num_eval >= 1, "train config: bad dataset sizes");
  require(cfg.num_heads >= 1 && cfg.model_dim >= 1, "train config: bad model shape");
  require(cfg.chunk_width >= 1, "train config: chunk width must be >= 1");
  require(cfg.energy_noise_std >= 0.0, "train config: negative energy noise");
}

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// rows of `a` (n x k) times `w` (k x m), plus optional bias
inline Matrix affine(const Matrix& a, const Matrix& w, const std::vector<double>* bias) {
  require(a.cols() == w.rows(), "affine: inner dimension mismatch");
  Matrix out(a.rows(), w.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < w.cols(); ++j) out(i, j) += aik * w(k, j);
    }
    if (bias != nullptr) {
      for (int j = 0; j < w.cols(); ++j) out(i, j) += (*bias)[j];
    }
  }
  return out;
}

inline Matrix tanh_rows(const Matrix& m) {
  Matrix out = m;
  for (auto& v : out.data()) v = std::tanh(v);
  return out;
}

// g_w += rows_in^T * d_out, for d_out = rows_in * w
inline void accum_weight_grad(const Matrix& rows_in, const Matrix& d_out, Matrix& g_w) {
  for (int i = 0; i < rows_in.rows(); ++i) {
    for (int k = 0; k < rows_in.cols(); ++k) {
      const double x = rows_in(i, k);
      if (x == 0.0) continue;
      for (int j = 0; j < d_out.cols(); ++j) g_w(k, j) += x * d_out(i, j);
    }
  }
}

// d_in += d_out * w^T
inline void backprop_affine(const Matrix& d_out, const Matrix& w, Matrix& d_in) {
  for (int i = 0; i < d_out.rows(); ++i) {
    for (int j = 0; j < d_out.cols(); ++j) {
      const double dv = d_out(i, j);
      if (dv == 0.0) continue;
      for (int k = 0; k < w.rows(); ++k) d_in(i, k) += dv * w(k, j);
    }
  }
}

}  // namespace detail

// Everything a backward pass needs, captured by the forward pass.
struct ForwardCache {
  TrainMode mode = TrainMode::mma;
  int epsilon = 0;
  Matrix features;
  std::vector<int> targets;
  std::vector<int> prev_tokens;
  Matrix enc;  // T x d, post-tanh
  Matrix dec;  // L x d, post-tanh
  std::vector<Matrix> mono_q, mono_k, chunk_q, chunk_k;
  std::vector<Matrix> energy, selection, chunk_energy;
  std::vector<AlignmentDistribution> align;      // unconstrained, per head
  std::vector<AlignmentDistribution> attention;  // weights actually used
  std::vector<ChunkAttention> chunk;
  HeadMask mask;
  Matrix context;  // L x d
  Matrix logits;   // L x vocab
  Matrix probs;
  double loss = 0.0;
  double accuracy = 0.0;
};

// Teacher-forced forward pass. `mask` selects the heads whose contexts enter
// the output average (all heads when null); the constraint coupling always
// spans every head of the layer. `energy_noise`, when non-null, is added to
// the monotonic energies before the sigmoid (training-time regularizer).
inline ForwardCache toy_forward(const ToyModelParams& params, const Matrix& features,
                                const std::vector<int>& targets, TrainMode mode, int epsilon,
                                const HeadMask* mask = nullptr,
                                const std::vector<Matrix>* energy_noise = nullptr) {
  const ToyDims& dm = params.dims;
  const int T = features.rows();
  const int L = static_cast<int>(targets.size());
  const int M = dm.num_heads;
  require(features.cols() == dm.feature_dim, "toy_forward: feature dim mismatch");
  require(T >= 1 && T <= dm.max_frames, "toy_forward: input length out of range");
  require(L >= 1 && L <= dm.max_steps, "toy_forward: target length out of range");
  for (int t : targets) {
    require(t >= 0 && t < dm.vocab, "toy_forward: target token out of vocab");
  }
  if (mask != nullptr) {
    require(static_cast<int>(mask->active.size()) == M, "toy_forward: mask size mismatch");
    require(mask->num_active() >= 1, "toy_forward: mask drops every head");
  }

  ForwardCache c;
  c.mode = mode;
  c.epsilon = epsilon;
  c.features = features;
  c.targets = targets;
  c.mask = mask != nullptr ? *mask : HeadMask{std::vector<std::uint8_t>(M, 1), -1};

  Matrix enc_pre = detail::affine(features, params.encoder_w, &params.encoder_b);
  for (int j = 0; j < T; ++j) {
    for (int k = 0; k < dm.model_dim; ++k) enc_pre(j, k) += params.encoder_positional(j, k);
  }
  c.enc = detail::tanh_rows(enc_pre);

  c.prev_tokens.resize(L);
  c.prev_tokens[0] = params.bos_token();
  for (int i = 1; i < L; ++i) c.prev_tokens[i] = targets[i - 1];
  Matrix dec_in(L, dm.model_dim);
  for (int i = 0; i < L; ++i) {
    for (int k = 0; k < dm.model_dim; ++k) {
      dec_in(i, k) = params.token_embedding(c.prev_tokens[i], k);
    }
  }
  Matrix dec_pre = detail::affine(dec_in, params.decoder_w, &params.decoder_b);
  for (int i = 0; i < L; ++i) {
    for (int k = 0; k < dm.model_dim; ++k) dec_pre(i, k) += params.positional(i, k);
  }
  c.dec = detail::tanh_rows(dec_pre);

  const double scale = 1.0 / std::sqrt(static_cast<double>(dm.model_dim));
  c.mono_q.resize(M);
  c.mono_k.resize(M);
  c.chunk_q.resize(M);
  c.chunk_k.resize(M);
  c.energy.resize(M);
  c.selection.resize(M);
  c.chunk_energy.resize(M);
  c.align.resize(M);
  for (int m = 0; m < M; ++m) {
    const HeadParams& h = params.heads[m];
    c.mono_q[m] = detail::affine(c.dec, h.query_w, nullptr);
    c.mono_k[m] = detail::affine(c.enc, h.key_w, nullptr);
    c.chunk_q[m] = detail::affine(c.dec, h.chunk_query_w, nullptr);
    c.chunk_k[m] = detail::affine(c.enc, h.chunk_key_w, nullptr);
    c.energy[m] = Matrix(L, T);
    c.chunk_energy[m] = Matrix(L, T);
    c.selection[m] = Matrix(L, T);
    for (int i = 0; i < L; ++i) {
      for (int j = 0; j < T; ++j) {
        double e = h.energy_bias;
        double u = h.chunk_bias;
        for (int k = 0; k < dm.model_dim; ++k) {
          e += scale * c.mono_q[m](i, k) * c.mono_k[m](j, k);
          u += scale * c.chunk_q[m](i, k) * c.chunk_k[m](j, k);
        }
        if (energy_noise != nullptr) e += (*energy_noise)[m](i, j);
        if (!std::isfinite(e) || !std::isfinite(u)) {
          throw std::runtime_error("toy_forward: non-finite energy at head " +
                                   std::to_string(m + 1) + ", step " + std::to_string(i + 1) +
                                   ", frame " + std::to_string(j + 1));
        }
        c.energy[m](i, j) = e;
        c.chunk_energy[m](i, j) = u;
        c.selection[m](i, j) = detail::sigmoid(e);
      }
    }
    c.align[m] = expected_alignment(SelectionProbabilities{c.selection[m], m + 1});
  }

  switch (mode) {
    case TrainMode::mma:
      c.attention = c.align;
      break;
    case TrainMode::mcmma_delta: {
      ConstraintConfig cc{epsilon, M, ConstraintMode::mutually_constrained};
      c.attention = mutually_constrained(c.align, cc);
      break;
    }
    case TrainMode::mcmma_gamma: {
      ConstraintConfig cc{epsilon, M, ConstraintMode::self_constrained};
      c.attention.clear();
      for (int m = 0; m < M; ++m) c.attention.push_back(self_constrained(c.align[m], cc));
      break;
    }
  }

  c.chunk.resize(M);
  c.context = Matrix(L, dm.model_dim);
  const double head_weight = 1.0 / c.mask.num_active();
  for (int m = 0; m < M; ++m) {
    c.chunk[m] = chunk_attention(c.attention[m], c.chunk_energy[m], dm.chunk_width);
    if (!c.mask.active[m]) continue;
    Matrix ctx = expected_context(c.chunk[m], c.enc);
    for (int i = 0; i < L; ++i) {
      for (int k = 0; k < dm.model_dim; ++k) c.context(i, k) += head_weight * ctx(i, k);
    }
  }

  c.logits = detail::affine(c.context, params.output_w, &params.output_b);
  require(c.logits.all_finite(), "toy_forward: non-finite logits");

  c.probs = Matrix(L, dm.vocab);
  double loss = 0.0;
  int correct = 0;
  for (int i = 0; i < L; ++i) {
    double mx = c.logits(i, 0);
    int arg = 0;
    for (int v = 1; v < dm.vocab; ++v) {
      if (c.logits(i, v) > mx) {
        mx = c.logits(i, v);
        arg = v;
      }
    }
    double denom = 0.0;
    for (int v = 0; v < dm.vocab; ++v) denom += std::exp(c.logits(i, v) - mx);
    for (int v = 0; v < dm.vocab; ++v) c.probs(i, v) = std::exp(c.logits(i, v) - mx) / denom;
    loss -= std::log(std::max(c.probs(i, targets[i]), 1e-300));
    correct += arg == targets[i] ? 1 : 0;
  }
  c.loss = loss / L;
  c.accuracy = static_cast<double>(correct) / L;
  return c;
}

// Hand-written reverse pass matching toy_forward step for step. Returns a
// parameter-shaped gradient of the mean cross-entropy. Dropped heads receive
// gradient only through the constraint coupling.
inline ToyModelParams toy_backward(const ToyModelParams& params, const ForwardCache& c) {
  const ToyDims& dm = params.dims;
  const int T = c.features.rows();
  const int L = static_cast<int>(c.targets.size());
  const int M = dm.num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dm.model_dim));

  ToyModelParams g = ToyModelParams::shaped(dm);

  // softmax cross-entropy, mean over steps
  Matrix d_logits(L, dm.vocab);
  for (int i = 0; i < L; ++i) {
    for (int v = 0; v < dm.vocab; ++v) {
      d_logits(i, v) = (c.probs(i, v) - (v == c.targets[i] ? 1.0 : 0.0)) / L;
    }
  }

  Matrix d_context(L, dm.model_dim);
  for (int i = 0; i < L; ++i) {
    for (int v = 0; v < dm.vocab; ++v) {
      const double dl = d_logits(i, v);
      g.output_b[v] += dl;
      for (int k = 0; k < dm.model_dim; ++k) {
        g.output_w(k, v) += c.context(i, k) * dl;
        d_context(i, k) += params.output_w(k, v) * dl;
      }
    }
  }

  Matrix d_enc(T, dm.model_dim);
  Matrix d_dec(L, dm.model_dim);
  const double head_weight = 1.0 / c.mask.num_active();

  // contexts and chunk attention, per head
  std::vector<Matrix> d_attention_full(M, Matrix(L, T + 1));
  std::vector<Matrix> d_chunk_q(M), d_chunk_k(M);
  for (int m = 0; m < M; ++m) {
    d_chunk_q[m] = Matrix(L, dm.model_dim);
    d_chunk_k[m] = Matrix(T, dm.model_dim);

    Matrix d_beta(L, T);
    if (c.mask.active[m]) {
      Matrix d_ctx_m = d_context;
      for (auto& v : d_ctx_m.data()) v *= head_weight;
      ContextAdjoint ca = context_adjoint(c.chunk[m].values, c.enc, d_ctx_m);
      d_beta = ca.d_weights;
      for (int j = 0; j < T; ++j) {
        for (int k = 0; k < dm.model_dim; ++k) d_enc(j, k) += ca.d_states(j, k);
      }
    }

    Matrix attn_frames(L, T);
    for (int i = 0; i < L; ++i) {
      for (int j = 0; j < T; ++j) attn_frames(i, j) = c.attention[m].values(i, j);
    }
    ChunkAdjoint chunk_adj =
        chunk_attention_adjoint(attn_frames, c.chunk_energy[m], dm.chunk_width, d_beta);
    for (int i = 0; i < L; ++i) {
      for (int j = 0; j < T; ++j) d_attention_full[m](i, j) = chunk_adj.d_alignment(i, j);
    }

    for (int i = 0; i < L; ++i) {
      for (int j = 0; j < T; ++j) {
        const double du = chunk_adj.d_energies(i, j);
        if (du == 0.0) continue;
        g.heads[m].chunk_bias += du;
        for (int k = 0; k < dm.model_dim; ++k) {
          d_chunk_q[m](i, k) += scale * du * c.chunk_k[m](j, k);
          d_chunk_k[m](j, k) += scale * du * c.chunk_q[m](i, k);
        }
      }
    }
  }

  // constraint coupling back to the unconstrained alignments
  std::vector<Matrix> d_align;
  switch (c.mode) {
    case TrainMode::mma:
      d_align = d_attention_full;
      break;
    case TrainMode::mcmma_delta: {
      ConstraintConfig cc{c.epsilon, M, ConstraintMode::mutually_constrained};
      d_align = constrained_adjoint(c.align, cc, d_attention_full);
      break;
    }
    case TrainMode::mcmma_gamma: {
      ConstraintConfig cc{c.epsilon, M, ConstraintMode::self_constrained};
      d_align = constrained_adjoint(c.align, cc, d_attention_full);
      break;
    }
  }

  // alignment recurrence, energies, projections
  for (int m = 0; m < M; ++m) {
    const Matrix d_p =
        alpha_adjoint(SelectionProbabilities{c.selection[m], m + 1}, c.align[m], d_align[m]);
    Matrix d_q(L, dm.model_dim), d_k(T, dm.model_dim);
    for (int i = 0; i < L; ++i) {
      for (int j = 0; j < T; ++j) {
        const double pij = c.selection[m](i, j);
        const double de = d_p(i, j) * pij * (1.0 - pij);
        if (de == 0.0) continue;
        g.heads[m].energy_bias += de;
        for (int k = 0; k < dm.model_dim; ++k) {
          d_q(i, k) += scale * de * c.mono_k[m](j, k);
          d_k(j, k) += scale * de * c.mono_q[m](i, k);
        }
      }
    }
    detail::accum_weight_grad(c.dec, d_q, g.heads[m].query_w);
    detail::accum_weight_grad(c.enc, d_k, g.heads[m].key_w);
    detail::accum_weight_grad(c.dec, d_chunk_q[m], g.heads[m].chunk_query_w);
    detail::accum_weight_grad(c.enc, d_chunk_k[m], g.heads[m].chunk_key_w);
    detail::backprop_affine(d_q, params.heads[m].query_w, d_dec);
    detail::backprop_affine(d_k, params.heads[m].key_w, d_enc);
    detail::backprop_affine(d_chunk_q[m], params.heads[m].chunk_query_w, d_dec);
    detail::backprop_affine(d_chunk_k[m], params.heads[m].chunk_key_w, d_enc);
  }

  // decoder state: dec = tanh(emb(prev) * decoder_w + positional + decoder_b)
  Matrix d_dec_pre(L, dm.model_dim);
  for (int i = 0; i < L; ++i) {
    for (int k = 0; k < dm.model_dim; ++k) {
      const double s = c.dec(i, k);
      d_dec_pre(i, k) = d_dec(i, k) * (1.0 - s * s);
      g.positional(i, k) += d_dec_pre(i, k);
      g.decoder_b[k] += d_dec_pre(i, k);
    }
  }
  Matrix dec_in(L, dm.model_dim);
  for (int i = 0; i < L; ++i) {
    for (int k = 0; k < dm.model_dim; ++k) {
      dec_in(i, k) = params.token_embedding(c.prev_tokens[i], k);
    }
  }
  detail::accum_weight_grad(dec_in, d_dec_pre, g.decoder_w);
  Matrix d_dec_in(L, dm.model_dim);
  detail::backprop_affine(d_dec_pre, params.decoder_w, d_dec_in);
  for (int i = 0; i < L; ++i) {
    for (int k = 0; k < dm.model_dim; ++k) {
      g.token_embedding(c.prev_tokens[i], k) += d_dec_in(i, k);
    }
  }

  // encoder: enc = tanh(features * encoder_w + encoder_positional + encoder_b)
  Matrix d_enc_pre(T, dm.model_dim);
  for (int j = 0; j < T; ++j) {
    for (int k = 0; k < dm.model_dim; ++k) {
      const double s = c.enc(j, k);
      d_enc_pre(j, k) = d_enc(j, k) * (1.0 - s * s);
      g.encoder_b[k] += d_enc_pre(j, k);
      g.encoder_positional(j, k) += d_enc_pre(j, k);
    }
  }
  detail::accum_weight_grad(c.features, d_enc_pre, g.encoder_w);

  return g;
}

struct ToyDecodeResult {
  DecodeTrace trace;
  std::vector<int> tokens;
};

// Greedy head-synchronous decode driven by the toy model. Decoder states are
// built from previously emitted tokens; every head contributes its chunk
// context at the boundary the state machine decided.
inline ToyDecodeResult toy_decode(const ToyModelParams& params, const Matrix& features,
                                  const DecodePolicy& policy, int max_len, int eos_token = -1) {
  const ToyDims& dm = params.dims;
  const int T = features.rows();
  const int M = dm.num_heads;
  require(max_len >= 1 && max_len <= dm.max_steps, "toy_decode: max_len out of range");
  require(T >= 1 && T <= dm.max_frames, "toy_decode: input length out of range");

  Matrix enc_pre = detail::affine(features, params.encoder_w, &params.encoder_b);
  for (int j = 0; j < T; ++j) {
    for (int k = 0; k < dm.model_dim; ++k) enc_pre(j, k) += params.encoder_positional(j, k);
  }
  const Matrix enc = detail::tanh_rows(enc_pre);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dm.model_dim));

  std::vector<Matrix> mono_k(M), chunk_k(M);
  for (int m = 0; m < M; ++m) {
    mono_k[m] = detail::affine(enc, params.heads[m].key_w, nullptr);
    chunk_k[m] = detail::affine(enc, params.heads[m].chunk_key_w, nullptr);
  }

  ToyDecodeResult res;
  res.trace.num_heads = M;
  res.trace.num_frames = T;
  res.trace.policy = policy;

  std::vector<HeadState> heads(M);
  for (int m = 0; m < M; ++m) heads[m].head_id = m;

  int prev_token = params.bos_token();
  for (int step = 1; step <= max_len; ++step) {
    // decoder state for this step
    std::vector<double> state(dm.model_dim);
    for (int k = 0; k < dm.model_dim; ++k) {
      double z = params.decoder_b[k] + params.positional(step - 1, k);
      for (int k2 = 0; k2 < dm.model_dim; ++k2) {
        z += params.token_embedding(prev_token, k2) * params.decoder_w(k2, k);
      }
      state[k] = std::tanh(z);
    }
    std::vector<std::vector<double>> q(M, std::vector<double>(dm.model_dim));
    for (int m = 0; m < M; ++m) {
      for (int k = 0; k < dm.model_dim; ++k) {
        double acc = 0.0;
        for (int k2 = 0; k2 < dm.model_dim; ++k2) {
          acc += state[k2] * params.heads[m].query_w(k2, k);
        }
        q[m][k] = acc;
      }
    }
    auto provider = [&](int m, int /*step*/, int frame) {
      double e = params.heads[m].energy_bias;
      for (int k = 0; k < dm.model_dim; ++k) e += scale * q[m][k] * mono_k[m](frame - 1, k);
      return detail::sigmoid(e);
    };

    StepOutcome oc = hsd_step(heads, provider, policy, step, T);
    if (!oc.any_activated) {
      res.trace.termination = Termination::input_exhausted;
      return res;
    }

    // mean of per-head chunk contexts at the decided boundaries
    std::vector<double> context(dm.model_dim, 0.0);
    for (int m = 0; m < M; ++m) {
      std::vector<double> cq(dm.model_dim, 0.0);
      for (int k = 0; k < dm.model_dim; ++k) {
        for (int k2 = 0; k2 < dm.model_dim; ++k2) {
          cq[k] += state[k2] * params.heads[m].chunk_query_w(k2, k);
        }
      }
      std::vector<double> u_row(T);
      for (int j = 0; j < T; ++j) {
        double u = params.heads[m].chunk_bias;
        for (int k = 0; k < dm.model_dim; ++k) u += scale * cq[k] * chunk_k[m](j, k);
        u_row[j] = u;
      }
      std::vector<double> ctx =
          chunk_context_inference(oc.heads[m].boundary, enc, u_row, dm.chunk_width);
      for (int k = 0; k < dm.model_dim; ++k) context[k] += ctx[k] / M;
    }

    int token = 0;
    double best = -1e300;
    for (int v = 0; v < dm.vocab; ++v) {
      double logit = params.output_b[v];
      for (int k = 0; k < dm.model_dim; ++k) logit += context[k] * params.output_w(k, v);
      if (logit > best) {
        best = logit;
        token = v;
      }
    }

    StepRecord rec;
    rec.step = step;
    rec.token = token;
    rec.spread = oc.spread;
    for (int m = 0; m < M; ++m) {
      rec.boundaries.push_back(oc.heads[m].boundary);
      rec.forced.push_back(oc.heads[m].forced ? 1 : 0);
      rec.frames_scanned.push_back(oc.heads[m].frames_scanned);
    }
    res.trace.steps.push_back(std::move(rec));
    res.tokens.push_back(token);
    advance_heads(heads);

    if (token == eos_token) {
      res.trace.termination = Termination::end_token;
      return res;
    }
    prev_token = token;
  }
  res.trace.termination = Termination::max_length;
  return res;
}

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double mean_spread = 0.0;
};

struct TrainResult {
  ToyModelParams params;  // best-accuracy checkpoint
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_accuracy = 0.0;
  SyntheticTask task;
  TrainConfig config;
};

inline ToyDims dims_for(const SyntheticTask& task, const TrainConfig& cfg) {
  return ToyDims{task.feature_dim, cfg.model_dim,  task.vocab_size, task.length,
                 task.frames,      cfg.num_heads,  cfg.chunk_width};
}

// Plain gradient descent on the synthetic task, deterministic given the
// seeds. Aborts with context if the loss goes non-finite.
inline TrainResult train(const TrainConfig& cfg, const SyntheticTask& task) {
  validate_train_config(cfg);
  validate_task(task);

  const std::vector<Utterance> train_set = gen_synthetic(task, cfg.num_train, 1);
  const std::vector<Utterance> probe_set = gen_synthetic(task, std::min(cfg.num_eval, 8), 2);

  ToyModelParams params = ToyModelParams::init(dims_for(task, cfg), cfg.seed);
  for (auto& h : params.heads) h.energy_bias = cfg.energy_bias_init;
  const int M = cfg.num_heads;

  TrainResult result;
  result.task = task;
  result.config = cfg;
  result.best_accuracy = -1.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double lr = cfg.learning_rate;
    if (epoch > cfg.decay_start) {
      lr *= std::pow(cfg.lr_decay, epoch - cfg.decay_start);
    }

    double epoch_loss = 0.0;
    double epoch_acc = 0.0;
    int idx = 0;
    while (idx < cfg.num_train) {
      const int batch = std::min(cfg.batch_size, cfg.num_train - idx);
      ToyModelParams grads = ToyModelParams::shaped(params.dims);
      for (int b = 0; b < batch; ++b, ++idx) {
        const Utterance& utt = train_set[idx];
        std::mt19937_64 sample_rng(
            derive_seed(derive_seed(cfg.seed, 0xd0d0 + static_cast<std::uint64_t>(epoch)),
                        static_cast<std::uint64_t>(idx)));
        HeadMask mask = headdrop_mask(M, cfg.headdrop_prob, sample_rng);

        std::vector<Matrix> noise;
        const std::vector<Matrix>* noise_ptr = nullptr;
        if (cfg.energy_noise_std > 0.0) {
          std::normal_distribution<double> normal(0.0, cfg.energy_noise_std);
          noise.assign(M, Matrix(task.length, task.frames));
          for (auto& n : noise) {
            for (auto& v : n.data()) v = normal(sample_rng);
          }
          noise_ptr = &noise;
        }

        ForwardCache fc = toy_forward(params, utt.features, utt.targets, cfg.mode,
                                      cfg.epsilon_train, &mask, noise_ptr);
        if (!std::isfinite(fc.loss)) {
          throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch) +
                                   ", sample " + std::to_string(idx));
        }
        epoch_loss += fc.loss;
        epoch_acc += fc.accuracy;
        ToyModelParams g = toy_backward(params, fc);
        grads.axpy(1.0 / batch, g);
      }
      if (cfg.grad_clip > 0.0) {
        double norm_sq = 0.0;
        ToyModelParams::visit(grads, [&](const double* d, std::size_t len) {
          for (std::size_t i = 0; i < len; ++i) norm_sq += d[i] * d[i];
        });
        const double norm = std::sqrt(norm_sq);
        if (norm > cfg.grad_clip) grads.scale(cfg.grad_clip / norm);
      }
      if (cfg.weight_decay > 0.0) params.scale(1.0 - lr * cfg.weight_decay);
      params.axpy(-lr, grads);
    }

    EpochLog log;
    log.epoch = epoch;
    log.loss = epoch_loss / cfg.num_train;
    // logged/selected accuracy is teacher-forced without head dropping, so
    // checkpoint selection does not ride on lucky mask draws
    (void)epoch_acc;
    double clean_acc = 0.0;
    for (const auto& utt : train_set) {
      clean_acc +=
          toy_forward(params, utt.features, utt.targets, cfg.mode, cfg.epsilon_train).accuracy;
    }
    log.accuracy = clean_acc / cfg.num_train;

    DecodePolicy probe_policy;
    probe_policy.epsilon = cfg.epsilon_train;
    double spread_sum = 0.0;
    for (const auto& utt : probe_set) {
      ToyDecodeResult dr = toy_decode(params, utt.features, probe_policy, task.length);
      spread_sum += boundary_spread(dr.trace).max_spread;
    }
    log.mean_spread = spread_sum / probe_set.size();
    result.log.push_back(log);

    if (log.accuracy > result.best_accuracy) {
      result.best_accuracy = log.accuracy;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

// Teacher-forced token accuracy over a dataset (no head dropping).
inline double teacher_forced_accuracy(const ToyModelParams& params,
                                      const std::vector<Utterance>& data, TrainMode mode,
                                      int epsilon) {
  double acc = 0.0;
  for (const auto& utt : data) {
    acc += toy_forward(params, utt.features, utt.targets, mode, epsilon).accuracy;
  }
  return acc / data.size();
}

enum class LatencyReference { model_without_sync, gold };

struct TradeoffRow {
  int epsilon = 0;
  double token_error = 0.0;
  double rel_frames = 0.0;
  double rel_ms = 0.0;
  int max_spread = 0;
};

// Decode the evaluation set once per epsilon and report token error plus
// relative latency. The latency reference is either the gold boundaries or
// the same model decoded without head synchronization (epsilon = T).
inline std::vector<TradeoffRow> evaluate(const ToyModelParams& params, const SyntheticTask& task,
                                         const std::vector<int>& epsilon_list,
                                         DecodePolicy base_policy,
                                         LatencyReference reference = LatencyReference::model_without_sync,
                                         int num_eval = 16) {
  validate_task(task);
  require(!epsilon_list.empty(), "evaluate: empty epsilon list");
  const std::vector<Utterance> eval_set = gen_synthetic(task, num_eval, 3);

  // reference decode: synchronization window as wide as the input
  std::vector<BoundarySequence> reference_bounds;
  for (const auto& utt : eval_set) {
    if (reference == LatencyReference::gold) {
      reference_bounds.push_back(
          BoundarySequence{utt.gold_boundaries, BoundarySource::reference});
    } else {
      DecodePolicy unsync = base_policy;
      unsync.epsilon = task.frames;
      ToyDecodeResult dr = toy_decode(params, utt.features, unsync, task.length);
      BoundarySequence seq = latest_head_boundaries(dr.trace, BoundarySource::reference);
      reference_bounds.push_back(std::move(seq));
    }
  }

  std::vector<TradeoffRow> rows;
  for (int eps : epsilon_list) {
    DecodePolicy policy = base_policy;
    policy.epsilon = eps;
    TradeoffRow row;
    row.epsilon = eps;
    long wrong = 0;
    long total = 0;
    double rel_sum = 0.0;
    for (std::size_t u = 0; u < eval_set.size(); ++u) {
      const Utterance& utt = eval_set[u];
      ToyDecodeResult dr = toy_decode(params, utt.features, policy, task.length);
      for (std::size_t i = 0; i < utt.targets.size(); ++i) {
        ++total;
        if (i >= dr.tokens.size() || dr.tokens[i] != utt.targets[i]) ++wrong;
      }
      row.max_spread = std::max(row.max_spread, boundary_spread(dr.trace).max_spread);
      if (!dr.trace.steps.empty() && !reference_bounds[u].boundaries.empty()) {
        BoundarySequence hyp = latest_head_boundaries(dr.trace, BoundarySource::hypothesis);
        rel_sum += relative_latency(hyp, reference_bounds[u]).rel_frames;
      }
    }
    row.token_error = static_cast<double>(wrong) / total;
    row.rel_frames = rel_sum / eval_set.size();
    row.rel_ms = to_milliseconds(row.rel_frames, 8, 10.0);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mcmma::toy

#endif  // MCMMA_TOY_HPP
