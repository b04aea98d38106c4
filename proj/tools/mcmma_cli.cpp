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
// Command-line workbench: alignment computation on probability files, hard
// head-synchronous decoding, oracle and gradient self-checks, toy training,
// and the epsilon-sweep trade-off evaluation with SVG output.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcmma/align.hpp"
#include "mcmma/decode.hpp"
#include "mcmma/io.hpp"
#include "mcmma/metrics.hpp"
#include "mcmma/oracle.hpp"
#include "mcmma/selfcheck.hpp"
#include "mcmma/toy.hpp"

namespace {

using namespace mcmma;

toy::TrainMode parse_mode(const std::string& mode) {
  if (mode == "mma") return toy::TrainMode::mma;
  if (mode == "mcmma") return toy::TrainMode::mcmma_delta;
  if (mode == "gamma") return toy::TrainMode::mcmma_gamma;
  throw std::invalid_argument("unknown mode '" + mode + "' (expected mma|mcmma|gamma)");
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  for (const auto& tok : io::split(csv, ',')) {
    out.push_back(static_cast<int>(io::parse_int(tok, 1, 1)));
  }
  return out;
}

bool is_checkpoint_file(const std::string& content) {
  return content.rfind("mcmma_checkpoint v1", 0) == 0;
}

void print_check_table(const std::vector<selfcheck::CheckResult>& results) {
  for (const auto& r : results) {
    std::printf("[%s] %-45s metric=%s threshold=%s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                io::fmt17(r.metric).c_str(), io::fmt17(r.threshold).c_str());
  }
}

int cmd_align(const std::string& input, const std::string& output, const std::string& mode,
              int epsilon) {
  const io::ProbabilityFile pf = io::parse_probability_csv(io::read_file(input));
  const int M = static_cast<int>(pf.heads.size());

  std::vector<AlignmentDistribution> alphas;
  for (int m = 0; m < M; ++m) {
    alphas.push_back(expected_alignment(SelectionProbabilities{pf.heads[m], m + 1}));
  }

  std::vector<AlignmentDistribution> result;
  const toy::TrainMode tm = parse_mode(mode);
  switch (tm) {
    case toy::TrainMode::mma:
      result = alphas;
      break;
    case toy::TrainMode::mcmma_delta:
      result = mutually_constrained(alphas,
                                    ConstraintConfig{epsilon, M, ConstraintMode::mutually_constrained});
      break;
    case toy::TrainMode::mcmma_gamma: {
      ConstraintConfig cfg{epsilon, M, ConstraintMode::self_constrained};
      for (const auto& a : alphas) result.push_back(self_constrained(a, cfg));
      break;
    }
  }
  io::write_file(output, io::format_alignment_csv(result));
  std::printf("wrote %s (%d heads, %d steps, %d frames)\n", output.c_str(), M, pf.steps,
              pf.frames);
  return 0;
}

DecodePolicy make_policy(int epsilon, double threshold, const std::string& forced_position,
                         const std::string& end_of_input) {
  DecodePolicy policy;
  policy.epsilon = epsilon;
  policy.threshold = threshold;
  if (forced_position == "rightmost") {
    policy.forced_position = ForcedPosition::rightmost_selected;
  } else if (forced_position == "argmax") {
    policy.forced_position = ForcedPosition::argmax_in_window;
  } else {
    throw std::invalid_argument("unknown forced position '" + forced_position + "'");
  }
  if (end_of_input == "force") {
    policy.end_of_input = EndOfInput::force_to_T;
  } else if (end_of_input == "end") {
    policy.end_of_input = EndOfInput::emit_end;
  } else {
    throw std::invalid_argument("unknown end-of-input policy '" + end_of_input + "'");
  }
  return policy;
}

int cmd_decode(const std::string& input, const std::string& output,
               const std::string& latency_output, const DecodePolicy& policy, int max_len,
               int utterance, const std::string& latency_ref) {
  const std::string content = io::read_file(input);
  DecodeTrace trace;
  DecodeTrace reference;
  std::vector<int> gold;

  if (is_checkpoint_file(content)) {
    const io::Checkpoint ck = io::parse_checkpoint(content);
    const auto eval_set = toy::gen_synthetic(ck.task, utterance + 1, 3);
    const toy::Utterance& utt = eval_set[utterance];
    gold = utt.gold_boundaries;
    const int len = max_len > 0 ? max_len : ck.task.length;
    trace = toy::toy_decode(ck.params, utt.features, policy, len).trace;
    DecodePolicy unsync = policy;
    unsync.epsilon = ck.task.frames;
    reference = toy::toy_decode(ck.params, utt.features, unsync, len).trace;
  } else {
    const io::ProbabilityFile pf = io::parse_probability_csv(content);
    const int len = max_len > 0 ? max_len : pf.steps;
    trace = decode_sequence(pf.heads, policy, len);
    DecodePolicy unsync = policy;
    unsync.epsilon = pf.frames;
    reference = decode_sequence(pf.heads, unsync, len);
  }

  io::write_file(output, io::format_trace(trace));
  std::printf("wrote %s (%zu steps, max spread %d)\n", output.c_str(), trace.steps.size(),
              boundary_spread(trace).max_spread);

  if (!latency_output.empty()) {
    require(!trace.steps.empty(), "decode: empty trace, no latency to report");
    const BoundarySequence hyp = latest_head_boundaries(trace, BoundarySource::hypothesis);
    BoundarySequence ref;
    if (latency_ref == "gold") {
      require(!gold.empty(), "decode: gold reference requires a checkpoint input");
      ref = BoundarySequence{gold, BoundarySource::reference};
    } else {
      ref = latest_head_boundaries(reference, BoundarySource::reference);
    }
    const LatencyReport rep = relative_latency(hyp, ref);
    io::write_file(latency_output, io::format_latency_csv(rep, hyp, ref));
    std::printf("wrote %s (rel %s frames, %s ms)\n", latency_output.c_str(),
                io::fmt17(rep.rel_frames).c_str(), io::fmt17(rep.rel_ms).c_str());
  }
  return 0;
}

int cmd_oracle_check(int seeds, std::uint64_t seed, std::int64_t mc_samples) {
  auto results = selfcheck::run_oracle_checks(seeds, seed);
  double divergence = 0.0;
  for (int heads : {2, 4}) {
    for (int eps : {1, 2, 8}) {
      const auto hsd = selfcheck::check_hsd_invariants(heads, eps, mc_samples, seed);
      results.push_back(hsd.spread);
      results.push_back(hsd.monotonicity);
      divergence = std::max(divergence, hsd.divergence_from_surrogate);
    }
  }
  print_check_table(results);
  std::printf("note: max |empirical hard-selection freq - parallel surrogate| = %s "
              "(reported only; the surrogate is not the fixed point)\n",
              io::fmt17(divergence).c_str());
  for (const auto& r : results) {
    if (!r.pass) return 1;
  }
  return 0;
}

int cmd_gradcheck(int seeds, std::uint64_t seed) {
  const auto results = selfcheck::run_gradient_checks(seeds, seed);
  print_check_table(results);
  for (const auto& r : results) {
    if (!r.pass) return 1;
  }
  return 0;
}

int cmd_train(const toy::TrainConfig& cfg, const toy::SyntheticTask& task,
              const std::string& output, const std::string& log_path) {
  const toy::TrainResult result = toy::train(cfg, task);
  io::write_file(output, io::format_checkpoint(result));
  if (!log_path.empty()) io::write_file(log_path, io::format_train_log_csv(result.log));
  std::printf("trained %s: best teacher-forced accuracy %s at epoch %d; wrote %s\n",
              toy::train_mode_name(cfg.mode).c_str(), io::fmt17(result.best_accuracy).c_str(),
              result.best_epoch, output.c_str());
  return 0;
}

int cmd_eval(const std::vector<std::string>& inputs, const std::string& output,
             const std::string& svg_path, const std::string& eps_csv, const DecodePolicy& base,
             const std::string& latency_ref, int num_eval) {
  const std::vector<int> eps_list = parse_int_list(eps_csv);
  const toy::LatencyReference ref = latency_ref == "gold"
                                        ? toy::LatencyReference::gold
                                        : toy::LatencyReference::model_without_sync;

  std::string csv;
  std::vector<io::SvgSeries> series;
  for (const auto& input : inputs) {
    const io::Checkpoint ck = io::parse_checkpoint(io::read_file(input));
    const auto rows = toy::evaluate(ck.params, ck.task, eps_list, base, ref, num_eval);
    if (inputs.size() > 1) csv += "# " + toy::train_mode_name(ck.mode) + "\n";
    csv += io::format_tradeoff_csv(rows);
    io::SvgSeries s;
    s.label = toy::train_mode_name(ck.mode);
    for (const auto& r : rows) {
      s.x.push_back(r.rel_ms);
      s.y.push_back(r.token_error);
    }
    series.push_back(std::move(s));
  }
  io::write_file(output, csv);
  std::printf("wrote %s\n", output.c_str());
  if (!svg_path.empty()) {
    io::write_file(svg_path, io::format_tradeoff_svg(series));
    std::printf("wrote %s\n", svg_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mutually-constrained monotonic multihead attention workbench"};
  app.require_subcommand(1);
  app.set_config("--config");

  std::string input, output, latency_output, svg_path, log_path;
  std::vector<std::string> inputs;
  std::string mode = "mma";
  std::string forced_position = "rightmost";
  std::string end_of_input = "force";
  std::string latency_ref = "model";
  std::string eps_csv = "1,2,4,8,32";
  int epsilon = 0;
  double threshold = 0.5;
  std::uint64_t seed = 1;
  int check_seeds = 50;
  std::int64_t mc_samples = 100000;
  int max_len = 0;
  int utterance = 0;

  toy::TrainConfig tc;
  toy::SyntheticTask task;

  auto* align = app.add_subcommand("align", "alignment distributions from a probability CSV");
  align->add_option("--input", input)->required();
  align->add_option("--output", output)->required();
  align->add_option("--mode", mode, "mma|mcmma|gamma");
  align->add_option("--epsilon", epsilon, "waiting threshold in frames");

  auto* decode = app.add_subcommand("decode", "head-synchronous hard decode");
  decode->add_option("--input", input, "probability CSV or checkpoint")->required();
  decode->add_option("--output", output, "trace file")->required();
  decode->add_option("--latency-output", latency_output, "latency report CSV");
  decode->add_option("--epsilon", epsilon);
  decode->add_option("--threshold", threshold, "activation threshold, default 0.5");
  decode->add_option("--forced-position", forced_position, "rightmost|argmax");
  decode->add_option("--end-of-input", end_of_input, "force|end");
  decode->add_option("--max-len", max_len, "0 = all available steps");
  decode->add_option("--utterance", utterance, "evaluation utterance index (checkpoint input)");
  decode->add_option("--latency-ref", latency_ref, "model|gold");

  auto* oracle_check = app.add_subcommand("oracle-check", "kernels vs brute-force references");
  oracle_check->add_option("--seeds", check_seeds, "random instances per grid point");
  oracle_check->add_option("--seed", seed);
  oracle_check->add_option("--mc-samples", mc_samples, "Monte Carlo decode samples");

  auto* gradcheck = app.add_subcommand("gradcheck", "adjoints vs central finite differences");
  int grad_seeds = 20;
  gradcheck->add_option("--seeds", grad_seeds);
  gradcheck->add_option("--seed", seed);

  auto* train = app.add_subcommand("train", "train the toy model");
  train->add_option("--mode", mode, "mma|mcmma|gamma");
  train->add_option("--epsilon", tc.epsilon_train, "training waiting threshold");
  train->add_option("--headdrop", tc.headdrop_prob);
  train->add_option("--seed", tc.seed);
  train->add_option("--epochs", tc.epochs);
  train->add_option("--lr", tc.learning_rate);
  train->add_option("--lr-decay", tc.lr_decay);
  train->add_option("--decay-start", tc.decay_start);
  train->add_option("--batch", tc.batch_size);
  train->add_option("--num-train", tc.num_train);
  train->add_option("--num-eval", tc.num_eval);
  train->add_option("--model-dim", tc.model_dim);
  train->add_option("--heads", tc.num_heads);
  train->add_option("--chunk-width", tc.chunk_width);
  train->add_option("--energy-noise", tc.energy_noise_std);
  train->add_option("--vocab", task.vocab_size);
  train->add_option("--length", task.length);
  train->add_option("--upsample", task.upsample);
  train->add_option("--noise-std", task.noise_std);
  train->add_option("--task-seed", task.seed);
  train->add_option("--feature-dim", task.feature_dim);
  train->add_option("--output", output, "checkpoint path")->required();
  train->add_option("--log", log_path, "training log CSV");

  auto* eval = app.add_subcommand("eval", "epsilon sweep on a trained checkpoint");
  eval->add_option("--input", inputs, "checkpoint path(s)")->required();
  eval->add_option("--output", output, "trade-off CSV")->required();
  eval->add_option("--eps-list", eps_csv, "comma-separated epsilon values");
  eval->add_option("--threshold", threshold);
  eval->add_option("--forced-position", forced_position, "rightmost|argmax");
  eval->add_option("--latency-ref", latency_ref, "model|gold");
  eval->add_option("--num-eval", tc.num_eval);

  auto* tradeoff = app.add_subcommand("tradeoff", "eval plus SVG trade-off chart");
  tradeoff->add_option("--input", inputs, "checkpoint path(s)")->required();
  tradeoff->add_option("--output", output, "trade-off CSV")->required();
  tradeoff->add_option("--svg", svg_path, "SVG chart path")->required();
  tradeoff->add_option("--eps-list", eps_csv);
  tradeoff->add_option("--threshold", threshold);
  tradeoff->add_option("--forced-position", forced_position, "rightmost|argmax");
  tradeoff->add_option("--latency-ref", latency_ref, "model|gold");
  tradeoff->add_option("--num-eval", tc.num_eval);

  CLI11_PARSE(app, argc, argv);

  try {
    if (align->parsed()) return cmd_align(input, output, mode, epsilon);
    if (decode->parsed()) {
      return cmd_decode(input, output, latency_output,
                        make_policy(epsilon, threshold, forced_position, end_of_input), max_len,
                        utterance, latency_ref);
    }
    if (oracle_check->parsed()) return cmd_oracle_check(check_seeds, seed, mc_samples);
    if (gradcheck->parsed()) return cmd_gradcheck(grad_seeds, seed);
    if (train->parsed()) {
      tc.mode = parse_mode(mode);
      task.frames = task.length * task.upsample;
      return cmd_train(tc, task, output, log_path);
    }
    if (eval->parsed()) {
      return cmd_eval(inputs, output, "", eps_csv,
                      make_policy(0, threshold, forced_position, "force"), latency_ref,
                      tc.num_eval);
    }
    if (tradeoff->parsed()) {
      return cmd_eval(inputs, output, svg_path, eps_csv,
                      make_policy(0, threshold, forced_position, "force"), latency_ref,
                      tc.num_eval);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
