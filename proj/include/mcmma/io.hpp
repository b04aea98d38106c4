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
// File formats: probability-matrix CSV, alignment CSV, decode traces,
// latency reports, checkpoints, training logs, trade-off tables, and the
// SVG trade-off chart. All floating-point output uses 17 significant digits
// so repeated runs are byte-identical.

#ifndef MCMMA_IO_HPP
#define MCMMA_IO_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "mcmma/align.hpp"
#include "mcmma/decode.hpp"
#include "mcmma/metrics.hpp"
#include "mcmma/toy.hpp"

namespace mcmma::io {

// Parse failures carry the 1-based line (and column where meaningful).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column = -1)
      : std::runtime_error(what + " (line " + std::to_string(line) +
                           (column >= 0 ? ", column " + std::to_string(column) : "") + ")"),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// 17 significant digits, locale-independent.
inline std::string fmt17(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& tok, int line, int column) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw ParseError("expected a number, got '" + tok + "'", line, column);
  }
  return v;
}

inline long parse_int(const std::string& tok, int line, int column) {
  long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
    throw ParseError("expected an integer, got '" + tok + "'", line, column);
  }
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// --- probability matrices -------------------------------------------------
//
// First line `T=<int>,L=<int>,M=<int>`, then M blocks of L rows with T
// comma-separated decimals each.

struct ProbabilityFile {
  int frames = 0;
  int steps = 0;
  std::vector<Matrix> heads;
};

inline ProbabilityFile parse_probability_csv(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  int lineno = 0;

  if (!std::getline(in, line)) throw ParseError("empty probability file", 1);
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto fields = split(line, ',');
  if (fields.size() != 3 || fields[0].rfind("T=", 0) != 0 || fields[1].rfind("L=", 0) != 0 ||
      fields[2].rfind("M=", 0) != 0) {
    throw ParseError("expected header 'T=<int>,L=<int>,M=<int>'", 1);
  }
  ProbabilityFile pf;
  pf.frames = static_cast<int>(parse_int(fields[0].substr(2), 1, 1));
  pf.steps = static_cast<int>(parse_int(fields[1].substr(2), 1, 2));
  const int num_heads = static_cast<int>(parse_int(fields[2].substr(2), 1, 3));
  if (pf.frames < 1 || pf.steps < 1 || num_heads < 1) {
    throw ParseError("header dimensions must be positive", 1);
  }

  for (int m = 0; m < num_heads; ++m) {
    Matrix head(pf.steps, pf.frames);
    for (int r = 0; r < pf.steps; ++r) {
      if (!std::getline(in, line)) {
        throw ParseError("unexpected end of file: head " + std::to_string(m + 1) + " row " +
                             std::to_string(r + 1) + " missing",
                         lineno + 1);
      }
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      auto cells = split(line, ',');
      if (static_cast<int>(cells.size()) != pf.frames) {
        throw ParseError("expected " + std::to_string(pf.frames) + " values, got " +
                             std::to_string(cells.size()),
                         lineno);
      }
      for (int c = 0; c < pf.frames; ++c) {
        const double v = parse_double(cells[c], lineno, c + 1);
        if (!(v >= 0.0 && v <= 1.0)) {
          throw ParseError("probability out of [0,1]", lineno, c + 1);
        }
        head(r, c) = v;
      }
    }
    pf.heads.push_back(std::move(head));
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) throw ParseError("trailing content after last head block", lineno);
  }
  return pf;
}

inline std::string format_probability_csv(const std::vector<Matrix>& heads) {
  require(!heads.empty(), "format_probability_csv: no heads");
  const int L = heads[0].rows();
  const int T = heads[0].cols();
  std::string out = "T=" + std::to_string(T) + ",L=" + std::to_string(L) +
                    ",M=" + std::to_string(heads.size()) + "\n";
  for (const auto& h : heads) {
    require(h.rows() == L && h.cols() == T, "format_probability_csv: shape mismatch");
    for (int r = 0; r < L; ++r) {
      for (int c = 0; c < T; ++c) {
        out += fmt17(h(r, c));
        out += (c + 1 == T) ? '\n' : ',';
      }
    }
  }
  return out;
}

// --- alignment output -----------------------------------------------------
//
// Same header, then M blocks of L rows x (T+1) columns.

inline std::string format_alignment_csv(const std::vector<AlignmentDistribution>& heads) {
  require(!heads.empty(), "format_alignment_csv: no heads");
  const int L = heads[0].steps();
  const int T = heads[0].frames();
  std::string out = "T=" + std::to_string(T) + ",L=" + std::to_string(L) +
                    ",M=" + std::to_string(heads.size()) + "\n";
  for (const auto& h : heads) {
    for (int r = 0; r < L; ++r) {
      for (int c = 0; c <= T; ++c) {
        out += fmt17(h.values(r, c));
        out += (c == T) ? '\n' : ',';
      }
    }
  }
  return out;
}

// --- decode traces ----------------------------------------------------------
//
// One record per output step; `*` after a boundary marks a forced head.

inline std::string forced_position_name(ForcedPosition f) {
  return f == ForcedPosition::rightmost_selected ? "rightmost" : "argmax";
}

inline std::string end_of_input_name(EndOfInput e) {
  return e == EndOfInput::force_to_T ? "force_to_T" : "emit_end";
}

inline std::string termination_name(Termination t) {
  switch (t) {
    case Termination::end_token: return "end_token";
    case Termination::max_length: return "max_length";
    case Termination::input_exhausted: return "input_exhausted";
  }
  return "?";
}

inline std::string format_trace(const DecodeTrace& trace) {
  std::string out = "# mcmma_trace v1 heads=" + std::to_string(trace.num_heads) +
                    " frames=" + std::to_string(trace.num_frames) +
                    " epsilon=" + std::to_string(trace.policy.epsilon) +
                    " threshold=" + fmt17(trace.policy.threshold) +
                    " forced_position=" + forced_position_name(trace.policy.forced_position) +
                    " end_of_input=" + end_of_input_name(trace.policy.end_of_input) + "\n";
  for (const auto& rec : trace.steps) {
    out += "step=" + std::to_string(rec.step) + " token=" + std::to_string(rec.token) + " heads=";
    for (std::size_t m = 0; m < rec.boundaries.size(); ++m) {
      if (m > 0) out += ',';
      out += std::to_string(rec.boundaries[m]);
      if (rec.forced[m]) out += '*';
      out += ":" + std::to_string(rec.frames_scanned[m]);
    }
    out += " spread=" + std::to_string(rec.spread) + "\n";
  }
  out += "# terminated=" + termination_name(trace.termination) + "\n";
  return out;
}

// --- latency report ---------------------------------------------------------

inline std::string format_latency_csv(const LatencyReport& rep, const BoundarySequence& hyp,
                                      const BoundarySequence& ref) {
  std::string out = "step,b_hyp,b_ref,diff\n";
  for (int i = 0; i < rep.l_min; ++i) {
    out += std::to_string(i + 1) + ',' + std::to_string(hyp.boundaries[i]) + ',' +
           std::to_string(ref.boundaries[i]) + ',' + fmt17(rep.per_step_diffs[i]) + "\n";
  }
  out += "summary,rel_frames," + fmt17(rep.rel_frames) + ",rel_ms," + fmt17(rep.rel_ms) + "\n";
  return out;
}

// --- training log and trade-off table ---------------------------------------

inline std::string format_train_log_csv(const std::vector<toy::EpochLog>& log) {
  std::string out = "epoch,loss,accuracy,mean_spread\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch) + ',' + fmt17(e.loss) + ',' + fmt17(e.accuracy) + ',' +
           fmt17(e.mean_spread) + "\n";
  }
  return out;
}

inline std::string format_tradeoff_csv(const std::vector<toy::TradeoffRow>& rows) {
  std::string out = "epsilon,token_error,rel_frames,rel_ms,max_spread\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epsilon) + ',' + fmt17(r.token_error) + ',' + fmt17(r.rel_frames) +
           ',' + fmt17(r.rel_ms) + ',' + std::to_string(r.max_spread) + "\n";
  }
  return out;
}

// --- checkpoints -------------------------------------------------------------
//
// Structured text: metadata lines, then named parameter blocks with explicit
// dimensions, 17 significant digits per value.

namespace detail {

inline void put_block(std::string& out, const std::string& name, const double* data, int rows,
                      int cols) {
  out += "block " + name + ' ' + std::to_string(rows) + ' ' + std::to_string(cols) + "\n";
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      out += fmt17(data[static_cast<std::size_t>(r) * cols + c]);
      out += (c + 1 == cols) ? '\n' : ' ';
    }
  }
}

struct BlockReader {
  std::istringstream in;
  int lineno = 0;

  explicit BlockReader(const std::string& content) : in(content) {}

  std::string next_line() {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("unexpected end of checkpoint", lineno + 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  void read_block(const std::string& name, double* data, int rows, int cols) {
    const std::string header = next_line();
    const std::string expect =
        "block " + name + ' ' + std::to_string(rows) + ' ' + std::to_string(cols);
    if (header != expect) {
      throw ParseError("expected '" + expect + "', got '" + header + "'", lineno);
    }
    for (int r = 0; r < rows; ++r) {
      const std::string line = next_line();
      auto cells = split(line, ' ');
      if (static_cast<int>(cells.size()) != cols) {
        throw ParseError("expected " + std::to_string(cols) + " values", lineno);
      }
      for (int c = 0; c < cols; ++c) {
        data[static_cast<std::size_t>(r) * cols + c] = parse_double(cells[c], lineno, c + 1);
      }
    }
  }
};

}  // namespace detail

inline std::string format_checkpoint(const toy::TrainResult& result) {
  const toy::ToyModelParams& p = result.params;
  const toy::ToyDims& dm = p.dims;
  std::string out = "mcmma_checkpoint v1\n";
  out += "mode " + toy::train_mode_name(result.config.mode) + "\n";
  out += "epsilon_train " + std::to_string(result.config.epsilon_train) + "\n";
  out += "best_epoch " + std::to_string(result.best_epoch) + "\n";
  out += "task vocab " + std::to_string(result.task.vocab_size) + " frames " +
         std::to_string(result.task.frames) + " length " + std::to_string(result.task.length) +
         " upsample " + std::to_string(result.task.upsample) + " noise_std " +
         fmt17(result.task.noise_std) + " seed " + std::to_string(result.task.seed) +
         " feature_dim " + std::to_string(result.task.feature_dim) + "\n";
  out += "dims feature_dim " + std::to_string(dm.feature_dim) + " model_dim " +
         std::to_string(dm.model_dim) + " vocab " + std::to_string(dm.vocab) + " max_steps " +
         std::to_string(dm.max_steps) + " max_frames " + std::to_string(dm.max_frames) +
         " heads " + std::to_string(dm.num_heads) + " chunk_width " +
         std::to_string(dm.chunk_width) + "\n";

  detail::put_block(out, "encoder_weight", p.encoder_w.data().data(), dm.feature_dim, dm.model_dim);
  detail::put_block(out, "encoder_bias", p.encoder_b.data(), 1, dm.model_dim);
  detail::put_block(out, "encoder_positional", p.encoder_positional.data().data(), dm.max_frames,
                    dm.model_dim);
  detail::put_block(out, "token_embedding", p.token_embedding.data().data(), dm.vocab + 1,
                    dm.model_dim);
  detail::put_block(out, "positional", p.positional.data().data(), dm.max_steps, dm.model_dim);
  detail::put_block(out, "decoder_weight", p.decoder_w.data().data(), dm.model_dim, dm.model_dim);
  detail::put_block(out, "decoder_bias", p.decoder_b.data(), 1, dm.model_dim);
  for (int m = 0; m < dm.num_heads; ++m) {
    const std::string prefix = "head" + std::to_string(m) + '.';
    const toy::HeadParams& h = p.heads[m];
    detail::put_block(out, prefix + "query_weight", h.query_w.data().data(), dm.model_dim,
                      dm.model_dim);
    detail::put_block(out, prefix + "key_weight", h.key_w.data().data(), dm.model_dim,
                      dm.model_dim);
    detail::put_block(out, prefix + "energy_bias", &h.energy_bias, 1, 1);
    detail::put_block(out, prefix + "chunk_query_weight", h.chunk_query_w.data().data(),
                      dm.model_dim, dm.model_dim);
    detail::put_block(out, prefix + "chunk_key_weight", h.chunk_key_w.data().data(), dm.model_dim,
                      dm.model_dim);
    detail::put_block(out, prefix + "chunk_energy_bias", &h.chunk_bias, 1, 1);
  }
  detail::put_block(out, "output_weight", p.output_w.data().data(), dm.model_dim, dm.vocab);
  detail::put_block(out, "output_bias", p.output_b.data(), 1, dm.vocab);
  out += "end\n";
  return out;
}

struct Checkpoint {
  toy::ToyModelParams params;
  toy::TrainMode mode = toy::TrainMode::mcmma_delta;
  int epsilon_train = 0;
  int best_epoch = 0;
  toy::SyntheticTask task;
};

inline Checkpoint parse_checkpoint(const std::string& content) {
  detail::BlockReader rd(content);
  if (rd.next_line() != "mcmma_checkpoint v1") {
    throw ParseError("not a checkpoint file (bad magic)", 1);
  }

  Checkpoint ck;
  {
    auto fields = split(rd.next_line(), ' ');
    if (fields.size() != 2 || fields[0] != "mode") throw ParseError("expected mode line", rd.lineno);
    if (fields[1] == "mma") {
      ck.mode = toy::TrainMode::mma;
    } else if (fields[1] == "mcmma_delta") {
      ck.mode = toy::TrainMode::mcmma_delta;
    } else if (fields[1] == "mcmma_gamma") {
      ck.mode = toy::TrainMode::mcmma_gamma;
    } else {
      throw ParseError("unknown mode '" + fields[1] + "'", rd.lineno);
    }
  }
  {
    auto fields = split(rd.next_line(), ' ');
    if (fields.size() != 2 || fields[0] != "epsilon_train") {
      throw ParseError("expected epsilon_train line", rd.lineno);
    }
    ck.epsilon_train = static_cast<int>(parse_int(fields[1], rd.lineno, 1));
  }
  {
    auto fields = split(rd.next_line(), ' ');
    if (fields.size() != 2 || fields[0] != "best_epoch") {
      throw ParseError("expected best_epoch line", rd.lineno);
    }
    ck.best_epoch = static_cast<int>(parse_int(fields[1], rd.lineno, 1));
  }
  {
    auto fields = split(rd.next_line(), ' ');
    if (fields.size() != 15 || fields[0] != "task") throw ParseError("expected task line", rd.lineno);
    ck.task.vocab_size = static_cast<int>(parse_int(fields[2], rd.lineno, 2));
    ck.task.frames = static_cast<int>(parse_int(fields[4], rd.lineno, 4));
    ck.task.length = static_cast<int>(parse_int(fields[6], rd.lineno, 6));
    ck.task.upsample = static_cast<int>(parse_int(fields[8], rd.lineno, 8));
    ck.task.noise_std = parse_double(fields[10], rd.lineno, 10);
    ck.task.seed = static_cast<std::uint64_t>(parse_int(fields[12], rd.lineno, 12));
    ck.task.feature_dim = static_cast<int>(parse_int(fields[14], rd.lineno, 14));
  }
  toy::ToyDims dm;
  {
    auto fields = split(rd.next_line(), ' ');
    if (fields.size() != 15 || fields[0] != "dims") throw ParseError("expected dims line", rd.lineno);
    dm.feature_dim = static_cast<int>(parse_int(fields[2], rd.lineno, 2));
    dm.model_dim = static_cast<int>(parse_int(fields[4], rd.lineno, 4));
    dm.vocab = static_cast<int>(parse_int(fields[6], rd.lineno, 6));
    dm.max_steps = static_cast<int>(parse_int(fields[8], rd.lineno, 8));
    dm.max_frames = static_cast<int>(parse_int(fields[10], rd.lineno, 10));
    dm.num_heads = static_cast<int>(parse_int(fields[12], rd.lineno, 12));
    dm.chunk_width = static_cast<int>(parse_int(fields[14], rd.lineno, 14));
  }
  ck.params = toy::ToyModelParams::shaped(dm);
  toy::ToyModelParams& p = ck.params;
  rd.read_block("encoder_weight", p.encoder_w.data().data(), dm.feature_dim, dm.model_dim);
  rd.read_block("encoder_bias", p.encoder_b.data(), 1, dm.model_dim);
  rd.read_block("encoder_positional", p.encoder_positional.data().data(), dm.max_frames,
                dm.model_dim);
  rd.read_block("token_embedding", p.token_embedding.data().data(), dm.vocab + 1, dm.model_dim);
  rd.read_block("positional", p.positional.data().data(), dm.max_steps, dm.model_dim);
  rd.read_block("decoder_weight", p.decoder_w.data().data(), dm.model_dim, dm.model_dim);
  rd.read_block("decoder_bias", p.decoder_b.data(), 1, dm.model_dim);
  for (int m = 0; m < dm.num_heads; ++m) {
    const std::string prefix = "head" + std::to_string(m) + '.';
    toy::HeadParams& h = p.heads[m];
    rd.read_block(prefix + "query_weight", h.query_w.data().data(), dm.model_dim, dm.model_dim);
    rd.read_block(prefix + "key_weight", h.key_w.data().data(), dm.model_dim, dm.model_dim);
    rd.read_block(prefix + "energy_bias", &h.energy_bias, 1, 1);
    rd.read_block(prefix + "chunk_query_weight", h.chunk_query_w.data().data(), dm.model_dim,
                  dm.model_dim);
    rd.read_block(prefix + "chunk_key_weight", h.chunk_key_w.data().data(), dm.model_dim,
                  dm.model_dim);
    rd.read_block(prefix + "chunk_energy_bias", &h.chunk_bias, 1, 1);
  }
  rd.read_block("output_weight", p.output_w.data().data(), dm.model_dim, dm.vocab);
  rd.read_block("output_bias", p.output_b.data(), 1, dm.vocab);
  if (rd.next_line() != "end") throw ParseError("expected 'end'", rd.lineno);
  return ck;
}

// --- SVG trade-off chart -----------------------------------------------------

struct SvgSeries {
  std::string label;
  std::vector<double> x;  // relative latency, ms
  std::vector<double> y;  // token error
};

// Minimal deterministic polyline chart: error (y) against relative latency
// (x), one series per mode.
inline std::string format_tradeoff_svg(const std::vector<SvgSeries>& series) {
  require(!series.empty(), "format_tradeoff_svg: no series");
  const int width = 640, height = 440;
  const double ml = 70, mr = 20, mt = 30, mb = 55;

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    require(s.x.size() == s.y.size() && !s.x.empty(), "format_tradeoff_svg: bad series");
    for (double v : s.x) {
      xmin = std::min(xmin, v);
      xmax = std::max(xmax, v);
    }
    for (double v : s.y) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (xmax - xmin < 1e-9) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  if (ymax - ymin < 1e-9) {
    ymin -= 0.01;
    ymax += 0.01;
  }
  const double padx = 0.05 * (xmax - xmin), pady = 0.05 * (ymax - ymin);
  xmin -= padx;
  xmax += padx;
  ymin -= pady;
  ymax += pady;

  auto px = [&](double x) {
    return fmt17(ml + (x - xmin) / (xmax - xmin) * (width - ml - mr));
  };
  auto py = [&](double y) {
    return fmt17(height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb));
  };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
      "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
      ' ' + std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes
  svg += "<line x1=\"" + px(xmin) + "\" y1=\"" + py(ymin) + "\" x2=\"" + px(xmax) + "\" y2=\"" +
         py(ymin) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + px(xmin) + "\" y1=\"" + py(ymin) + "\" x2=\"" + px(xmin) + "\" y2=\"" +
         py(ymax) + "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    char xbuf[32], ybuf[32];
    snprintf(xbuf, sizeof(xbuf), "%.1f", xv);
    snprintf(ybuf, sizeof(ybuf), "%.3f", yv);
    svg += "<text x=\"" + px(xv) + "\" y=\"" + std::to_string(height - mb + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + xbuf + "</text>\n";
    svg += "<text x=\"" + std::to_string(static_cast<int>(ml) - 8) + "\" y=\"" + py(yv) +
           "\" font-size=\"11\" text-anchor=\"end\">" + ybuf + "</text>\n";
  }
  svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"" + std::to_string(height - 12) +
         "\" font-size=\"13\" text-anchor=\"middle\">relative latency (ms)</text>\n";
  svg += "<text x=\"16\" y=\"" + std::to_string(height / 2) +
         "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         std::to_string(height / 2) + ")\">token error</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 5];
    std::string points;
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (i > 0) points += ' ';
      points += px(series[s].x[i]) + ',' + py(series[s].y[i]);
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" +
           points + "\"/>\n";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      svg += "<circle cx=\"" + px(series[s].x[i]) + "\" cy=\"" + py(series[s].y[i]) +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    svg += "<text x=\"" + std::to_string(width - static_cast<int>(mr) - 6) + "\" y=\"" +
           std::to_string(static_cast<int>(mt) + 16 * static_cast<int>(s)) +
           "\" font-size=\"12\" text-anchor=\"end\" fill=\"" + color + "\">" + series[s].label +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace mcmma::io

#endif  // MCMMA_IO_HPP
