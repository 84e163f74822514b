#pragma once

// Sweep driver: one coding pass per text feeds every coder in lockstep, then
// each (coder, alpha) cell replays the coder's bit ledger through a channel of
// rate C = alpha * lambda * l_Sh.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "streamcode/channel.hpp"
#include "streamcode/coder_ac.hpp"
#include "streamcode/coder_core.hpp"
#include "streamcode/coder_deflate.hpp"
#include "streamcode/coder_rans.hpp"
#include "streamcode/corpus.hpp"
#include "streamcode/predictor.hpp"
#include "streamcode/trace.hpp"

namespace streamcode {

inline const std::vector<std::string>& default_alpha_grid() {
  static const std::vector<std::string> grid = {"0.8", "0.9", "0.95", "0.98", "1",  "1.02",
                                                "1.05", "1.1", "1.2",  "1.5",  "2"};
  return grid;
}

inline const std::vector<std::string>& default_coders() {
  static const std::vector<std::string> ids = {"shannon", "huffman-formula", "huffman-exact", "ac", "ac-p32",
                                               "rans-k16", "rans-k8", "rans-k4", "rans-k1", "deflate"};
  return ids;
}

struct SweepConfig {
  std::vector<std::string> inputs;  // text files, or trace files when the predictor is trace replay
  TokenizerSpec tokenizer;
  Rational char_rate{20};
  PredictorKind predictor = PredictorKind::NgramAdaptive;
  int order = 3;
  double delta = 0.05;
  int precision = kDefaultPrecision;
  std::vector<std::string> coders = default_coders();
  std::vector<std::string> alphas = default_alpha_grid();
  std::size_t tokens = 10'000;
  int rans_renorm_bits = 1;
  int deflate_level = -1;
  unsigned jobs = 0;  // 0: hardware concurrency
};

/// One source text prepared for coding.
struct TextInput {
  std::string name;
  TokenStream stream;
  std::shared_ptr<const Trace> trace;  // set for trace replay
};

// ---- Coding pass ------------------------------------------------------------

/// A bit ledger: channel units in queue order plus the rule that turns the
/// channel trace into decode instants.
struct CoderLedger {
  enum class Rule { UnitEnd, ChannelBit };
  struct Unit {
    std::size_t arrival_token = 0;  // enqueued at this token's arrival
    std::int64_t bits_q32 = 0;
  };

  CoderSpec spec;
  Rule rule = Rule::UnitEnd;
  std::vector<Unit> units;
  std::vector<std::size_t> unit_of_token;  // UnitEnd
  std::vector<std::uint64_t> betas;        // ChannelBit
  int128 total_bits_q32 = 0;
  std::string error;  // non-empty when the coder failed on this text

  bool ok() const { return error.empty(); }
  double total_bits() const { return q32_to_double(total_bits_q32); }
  bool scalar_units() const {
    return rule == Rule::UnitEnd && units.size() == unit_of_token.size() &&
           std::all_of(unit_of_token.begin(), unit_of_token.end(),
                       [i = std::size_t{0}](std::size_t u) mutable { return u == i++; });
  }
};

struct TextRun {
  std::string name;
  TokenStream stream;
  PredictorSpec predictor;
  int128 shannon_q32 = 0;
  std::vector<CoderLedger> ledgers;

  /// Shannon bits per character, exact.
  Rational l_sh() const { return Rational(shannon_q32, detail::checked_mul(kQ32One, stream.total_chars())); }
  /// C = alpha * lambda * l_Sh.
  Rational channel_rate(const Rational& alpha) const { return alpha * stream.char_rate() * l_sh(); }

  const CoderLedger& ledger(std::string_view id) const {
    for (const auto& l : ledgers)
      if (l.spec.id() == id) return l;
    throw UsageError("coder '" + std::string(id) + "' was not run");
  }
};

namespace detail {

struct RansState {
  std::vector<TokenId> tokens;
  std::vector<QuantizedPmf> pmfs;
  std::size_t first = 0;
};

inline void flush_rans(CoderLedger& l, RansState& st, std::vector<BitBuffer>* blocks) {
  if (st.tokens.empty()) return;
  BitBuffer bits = rans_encode_block(st.tokens, st.pmfs, l.spec.rans, st.first);
  std::size_t unit = l.units.size();
  l.units.push_back({st.first + st.tokens.size() - 1, std::int64_t(bits.size()) << 32});
  for (std::size_t i = 0; i < st.tokens.size(); ++i) l.unit_of_token.push_back(unit);
  l.total_bits_q32 += std::int64_t(bits.size()) << 32;
  if (blocks) blocks->push_back(std::move(bits));
  st.first += st.tokens.size();
  st.tokens.clear();
  st.pmfs.clear();
}

}  // namespace detail

/// Runs every coder over the stream in one pass and verifies losslessness
/// (Huffman codewords inline; AC and rANS by a second decoding pass).
inline TextRun code_text(const TextInput& input, const PredictorSpec& pspec, const std::vector<CoderSpec>& coders) {
  TextRun run;
  run.name = input.name;
  run.stream = input.stream;
  run.predictor = pspec;
  const TokenStream& stream = run.stream;
  const std::size_t n = stream.size();
  if (n == 0) throw UsageError("text '" + input.name + "' has no tokens");

  run.ledgers.reserve(coders.size());
  for (const auto& c : coders) {
    CoderLedger l;
    l.spec = c;
    l.rule = c.kind == CoderKind::Arithmetic ? CoderLedger::Rule::ChannelBit : CoderLedger::Rule::UnitEnd;
    run.ledgers.push_back(std::move(l));
  }

  std::vector<std::unique_ptr<AcEncoder>> ac(coders.size());
  std::vector<detail::RansState> rans(coders.size());
  std::vector<std::vector<BitBuffer>> rans_blocks(coders.size());
  for (std::size_t k = 0; k < coders.size(); ++k) {
    try {
      coders[k].validate();
      if (coders[k].kind == CoderKind::Arithmetic) ac[k] = std::make_unique<AcEncoder>(coders[k].ac_precision);
      if (coders[k].kind == CoderKind::Rans) detail::check_rans(coders[k].rans, pspec.precision);
      if (coders[k].kind == CoderKind::Arithmetic && pspec.precision > coders[k].ac_precision - 2)
        throw UsageError("frequency precision too large for " + coders[k].id());
    } catch (const Error& e) {
      run.ledgers[k].error = e.what();
    }
  }

  auto predictor = make_predictor(pspec);
  for (std::size_t i = 0; i < n; ++i) {
    const QuantizedPmf pmf = predictor->next_pmf();
    const TokenId x = stream[i].token;
    if (x >= pmf.size()) throw ParseError("token outside predictor vocabulary", i);
    run.shannon_q32 += shannon_bits_q32(pmf.freq(x), pmf.precision(), i);
    for (std::size_t k = 0; k < coders.size(); ++k) {
      CoderLedger& l = run.ledgers[k];
      if (!l.ok()) continue;
      try {
        switch (coders[k].kind) {
          case CoderKind::Shannon:
          case CoderKind::HuffmanFormula: {
            auto u = encode_token_scalar(coders[k], pmf, x, i, Rational(0));
            l.units.push_back({i, u.bits_q32});
            l.unit_of_token.push_back(i);
            l.total_bits_q32 += u.bits_q32;
            break;
          }
          case CoderKind::HuffmanExact: {
            HuffmanCode code = huffman_exact(pmf);
            BitBuffer bits = code.encode(x, i);
            BitReader r(bits);
            if (code.decode(r) != x || !r.exhausted()) throw Error("Huffman roundtrip failed at token " + std::to_string(i));
            std::int64_t q = std::int64_t(bits.size()) << 32;
            l.units.push_back({i, q});
            l.unit_of_token.push_back(i);
            l.total_bits_q32 += q;
            break;
          }
          case CoderKind::Arithmetic:
            ac[k]->encode(pmf, x, i);
            break;
          case CoderKind::Rans: {
            auto& st = rans[k];
            st.tokens.push_back(x);
            st.pmfs.push_back(pmf);
            if (st.tokens.size() == coders[k].rans.block_size) detail::flush_rans(l, st, &rans_blocks[k]);
            break;
          }
          case CoderKind::DeflateFlush:
            break;
        }
      } catch (const Error& e) {
        l.error = e.what();
      }
    }
    predictor->update(x);
  }

  // Finish the stateful coders.
  for (std::size_t k = 0; k < coders.size(); ++k) {
    CoderLedger& l = run.ledgers[k];
    if (!l.ok()) continue;
    try {
      if (coders[k].kind == CoderKind::Arithmetic) {
        ac[k]->finish();
        std::vector<std::int64_t> per(n, 0);
        for (std::size_t s : ac[k]->bit_steps()) per[s] += kQ32One;
        for (std::size_t i = 0; i < n; ++i) l.units.push_back({i, per[i]});
        l.total_bits_q32 = int128(ac[k]->bits().size()) << 32;
      } else if (coders[k].kind == CoderKind::Rans) {
        detail::flush_rans(l, rans[k], &rans_blocks[k]);
      } else if (coders[k].kind == CoderKind::DeflateFlush) {
        std::vector<std::string> surfaces(n);
        for (std::size_t i = 0; i < n; ++i) surfaces[i] = stream.surface(i);
        auto ledger = deflate_ledger(surfaces, coders[k].deflate_level);
        for (const auto& e : ledger) {
          std::int64_t q = std::int64_t(e.bits()) << 32;
          l.units.push_back({e.token, q});
          l.unit_of_token.push_back(e.token);
          l.total_bits_q32 += q;
        }
      }
    } catch (const Error& e) {
      l.error = e.what();
    }
  }

  // Decoding pass: replays the predictor, records betas, checks every token.
  std::vector<std::unique_ptr<AcDecoder>> acd(coders.size());
  std::vector<std::unique_ptr<BitReader>> rans_in(coders.size());
  std::vector<std::size_t> rans_next(coders.size(), 0);
  std::vector<std::vector<QuantizedPmf>> rans_pmfs(coders.size());
  bool any = false;
  for (std::size_t k = 0; k < coders.size(); ++k) {
    if (!run.ledgers[k].ok()) continue;
    if (coders[k].kind == CoderKind::Arithmetic) {
      acd[k] = std::make_unique<AcDecoder>(ac[k]->bits(), coders[k].ac_precision);
      any = true;
    } else if (coders[k].kind == CoderKind::Rans) {
      any = true;
    }
  }
  if (any) {
    auto replay = make_predictor(pspec);
    for (std::size_t i = 0; i < n; ++i) {
      const QuantizedPmf pmf = replay->next_pmf();
      const TokenId x = stream[i].token;
      for (std::size_t k = 0; k < coders.size(); ++k) {
        CoderLedger& l = run.ledgers[k];
        if (!l.ok()) continue;
        try {
          if (acd[k]) {
            if (acd[k]->decode(pmf) != x) throw Error("arithmetic decode mismatch at token " + std::to_string(i));
          } else if (coders[k].kind == CoderKind::Rans) {
            rans_pmfs[k].push_back(pmf);
            const std::size_t block = l.unit_of_token[i];
            const bool last = i + 1 == n || l.unit_of_token[i + 1] != block;
            if (last) {
              auto ids = rans_decode_block(rans_blocks[k][block], rans_pmfs[k], coders[k].rans);
              std::size_t first = i + 1 - ids.size();
              for (std::size_t j = 0; j < ids.size(); ++j)
                if (ids[j] != stream[first + j].token)
                  throw Error("rANS decode mismatch at token " + std::to_string(first + j));
              rans_pmfs[k].clear();
            }
          }
        } catch (const Error& e) {
          l.error = e.what();
        }
      }
      replay->update(x);
    }
    for (std::size_t k = 0; k < coders.size(); ++k)
      if (acd[k] && run.ledgers[k].ok()) run.ledgers[k].betas = acd[k]->betas();
  }
  return run;
}

// ---- Delays -----------------------------------------------------------------

/// Ticks of every token's arrival on `base`.
inline std::vector<int128> arrival_ticks(const TokenStream& stream, const TimeBase& base) {
  const int128 per_char = base.ticks(Rational(1) / stream.char_rate());
  std::vector<int128> out(stream.size());
  for (std::size_t i = 0; i < stream.size(); ++i) out[i] = detail::checked_mul(stream[i].chars_through, per_char);
  return out;
}

inline TimeBase time_base_for(const TokenStream& stream, const Rational& rate_bps) {
  return TimeBase::make(rate_bps, stream.char_rate().num());
}

inline ChannelTrace serve_ledger(const CoderLedger& l, std::span<const int128> arrivals, const TimeBase& base) {
  std::vector<QueueUnit> q;
  q.reserve(l.units.size());
  for (const auto& u : l.units) q.push_back({arrivals[u.arrival_token], u.bits_q32});
  return serve(q, base);
}

/// Per-token delays of one coder on a channel of rate `rate_bps`.
inline DelayTable ledger_delays(const CoderLedger& l, const TokenStream& stream, const Rational& rate_bps) {
  if (!l.ok()) throw Error(l.spec.id() + ": " + l.error);
  TimeBase base = time_base_for(stream, rate_bps);
  auto arr = arrival_ticks(stream, base);
  if (l.rule == CoderLedger::Rule::ChannelBit) return ac_delays(serve_ledger(l, arr, base), l.betas, arr);
  if (l.scalar_units()) {
    std::vector<std::int64_t> bits(l.units.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = l.units[i].bits_q32;
    return lindley_delays(arr, bits, base);
  }
  return block_delays(serve_ledger(l, arr, base), l.unit_of_token, arr);
}

// ---- Results ----------------------------------------------------------------

struct BitsRow {
  std::string text, coder;
  std::size_t tokens = 0;
  double total_bits = 0, bits_per_token = 0, bpc = 0, overhead_pct = 0;
  std::string error;
};

struct RunResult {
  std::string text, coder, alpha_text;
  Rational alpha, rate_bps;
  double bits_per_token = 0, bpc = 0, overhead_pct = 0;
  long double mean_delay = 0, p95_delay = 0, max_delay = 0;
  bool stable = false;
  std::string error;
};

struct SweepResult {
  SweepConfig config;
  std::vector<TextRun> texts;
  std::vector<BitsRow> bits;
  std::vector<RunResult> runs;
};

inline BitsRow bits_row(const TextRun& t, const CoderLedger& l) {
  BitsRow r;
  r.text = t.name;
  r.coder = l.spec.id();
  r.tokens = t.stream.size();
  r.error = l.error;
  if (!l.ok()) return r;
  r.total_bits = l.total_bits();
  r.bits_per_token = r.total_bits / double(r.tokens);
  r.bpc = r.total_bits / double(t.stream.total_chars());
  double sh_bpc = q32_to_double(t.shannon_q32) / double(t.stream.total_chars());
  r.overhead_pct = 100.0 * (r.bpc / sh_bpc - 1.0);
  return r;
}

/// A coder keeps up iff C exceeds its own source rate lambda * bpc.
inline bool is_stable(const TextRun& t, const CoderLedger& l, const Rational& rate_bps) {
  Rational source = t.stream.char_rate() * Rational(l.total_bits_q32, detail::checked_mul(kQ32One, t.stream.total_chars()));
  return rate_bps > source;
}

inline RunResult run_cell(const TextRun& t, const CoderLedger& l, const std::string& alpha_text) {
  RunResult r;
  r.text = t.name;
  r.coder = l.spec.id();
  r.alpha_text = alpha_text;
  r.alpha = Rational::parse(alpha_text);
  r.rate_bps = t.channel_rate(r.alpha);
  auto b = bits_row(t, l);
  r.bits_per_token = b.bits_per_token;
  r.bpc = b.bpc;
  r.overhead_pct = b.overhead_pct;
  r.error = l.error;
  if (!l.ok()) return r;
  DelayTable d = ledger_delays(l, t.stream, r.rate_bps);
  r.mean_delay = d.mean();
  r.p95_delay = percentile_delay(d, 95);
  r.max_delay = d.max();
  r.stable = is_stable(t, l, r.rate_bps);
  return r;
}

// ---- Pareto -----------------------------------------------------------------

struct ParetoPoint {
  std::string label;
  double bpc = 0, delay = 0;
};

/// Indices of points not dominated in (bpc, delay); exact ties are all kept.
inline std::vector<std::size_t> pareto_frontier(const std::vector<ParetoPoint>& pts) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      if (i == j) continue;
      dominated = pts[j].bpc <= pts[i].bpc && pts[j].delay <= pts[i].delay &&
                  (pts[j].bpc < pts[i].bpc || pts[j].delay < pts[i].delay);
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

// ---- Sweep ------------------------------------------------------------------

/// Runs fn(0..n) on up to `jobs` threads. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::string text_name(const std::string& path) { return std::filesystem::path(path).stem().string(); }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Loads and truncates one input to the token budget.
inline TextInput load_input(const std::string& path, const SweepConfig& cfg) {
  TextInput in;
  in.name = text_name(path);
  if (cfg.predictor == PredictorKind::TraceReplay) {
    auto trace = std::make_shared<Trace>(read_trace_file(path));
    if (trace->records.size() < cfg.tokens)
      throw UsageError("trace '" + path + "' has " + std::to_string(trace->records.size()) +
                       " positions, fewer than the token budget " + std::to_string(cfg.tokens));
    in.stream = stream_from_trace(*trace, cfg.char_rate, cfg.tokenizer.convention).prefix(cfg.tokens);
    in.trace = std::move(trace);
  } else {
    in.stream = tokenize(read_file(path), cfg.tokenizer, cfg.char_rate).prefix(cfg.tokens);
  }
  return in;
}

inline PredictorSpec predictor_for(const TextInput& in, const SweepConfig& cfg) {
  PredictorSpec p;
  p.kind = cfg.predictor;
  p.vocab_size = in.trace ? in.trace->header.vocab_size : in.stream.vocab_size();
  p.precision = cfg.precision;
  p.order = cfg.order;
  p.delta = cfg.delta;
  p.trace = in.trace;
  return p;
}

inline std::vector<CoderSpec> coder_specs(const SweepConfig& cfg) {
  std::vector<CoderSpec> out;
  for (const auto& id : cfg.coders) {
    auto s = CoderSpec::parse(id);
    s.rans.renorm_bits = cfg.rans_renorm_bits;
    s.deflate_level = cfg.deflate_level;
    s.validate();
    if (std::any_of(out.begin(), out.end(), [&](const CoderSpec& o) { return o.id() == s.id(); }))
      throw UsageError("coder '" + id + "' listed twice");
    out.push_back(s);
  }
  if (out.empty()) throw UsageError("no coders selected");
  return out;
}

inline void validate(const SweepConfig& cfg) {
  if (cfg.inputs.empty()) throw UsageError("no inputs given");
  if (cfg.tokens == 0) throw UsageError("token budget must be positive");
  if (cfg.char_rate <= Rational(0)) throw UsageError("character rate must be positive");
  if (cfg.alphas.empty()) throw UsageError("empty alpha grid");
  for (const auto& a : cfg.alphas)
    if (Rational::parse(a) <= Rational(0)) throw UsageError("alpha must be positive: " + a);
  QuantizedPmf::check_precision(cfg.precision);
}

/// Texts are coded in parallel, then every (text, coder, alpha) cell. Output
/// order follows the configuration, never completion order.
inline SweepResult run_sweep(const SweepConfig& cfg) {
  validate(cfg);
  auto coders = coder_specs(cfg);
  SweepResult res;
  res.config = cfg;
  res.texts.resize(cfg.inputs.size());
  parallel_for(cfg.inputs.size(), cfg.jobs, [&](std::size_t i) {
    TextInput in = load_input(cfg.inputs[i], cfg);
    res.texts[i] = code_text(in, predictor_for(in, cfg), coders);
  });
  for (std::size_t i = 0; i < res.texts.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (res.texts[i].name == res.texts[j].name)
        throw UsageError("two inputs share the name '" + res.texts[i].name + "'");

  struct Cell {
    std::size_t text, coder, alpha;
  };
  std::vector<Cell> cells;
  for (std::size_t t = 0; t < res.texts.size(); ++t) {
    for (std::size_t c = 0; c < coders.size(); ++c) {
      res.bits.push_back(bits_row(res.texts[t], res.texts[t].ledgers[c]));
      for (std::size_t a = 0; a < cfg.alphas.size(); ++a) cells.push_back({t, c, a});
    }
  }
  res.runs.resize(cells.size());
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
    const Cell& c = cells[i];
    res.runs[i] = run_cell(res.texts[c.text], res.texts[c.text].ledgers[c.coder], cfg.alphas[c.alpha]);
  });
  return res;
}

// ---- CSV --------------------------------------------------------------------

inline std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string fmt(long double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*Lf", digits, v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

/// Run metadata as "# key=value" lines.
inline void write_metadata(std::ostream& out, const SweepResult& res) {
  const auto& cfg = res.config;
  auto coders = coder_specs(cfg);
  std::string alphas, ks, ids;
  for (const auto& a : cfg.alphas) alphas += (alphas.empty() ? "" : ",") + a;
  for (const auto& c : coders) {
    ids += (ids.empty() ? "" : ",") + c.id();
    if (c.kind == CoderKind::Rans) ks += (ks.empty() ? "" : ",") + std::to_string(c.rans.block_size);
  }
  PredictorSpec p;
  p.kind = cfg.predictor;
  p.order = cfg.order;
  p.delta = cfg.delta;
  out << "# tool=streamcode\n";
  out << "# tokenizer=" << (cfg.predictor == PredictorKind::TraceReplay ? "trace" : cfg.tokenizer.name()) << '\n';
  out << "# char_rate_cps=" << cfg.char_rate.str() << '\n';
  out << "# predictor=" << (cfg.predictor == PredictorKind::TraceReplay ? std::string("trace") : p.describe()) << '\n';
  out << "# precision_F=" << cfg.precision << '\n';
  out << "# coders=" << ids << '\n';
  out << "# ac_code_bits_P=64 (ac), 32 (ac-p32)\n";
  out << "# rans_state_bits_S=32\n";
  out << "# rans_renorm_bits_R=" << cfg.rans_renorm_bits << '\n';
  out << "# rans_block_K=" << ks << '\n';
  out << "# deflate=zlib raw, level " << cfg.deflate_level << " (-1 is zlib default), sync flush per token, payload bytes only\n";
  out << "# alpha_grid=" << alphas << '\n';
  out << "# token_budget=" << cfg.tokens << '\n';
  out << "# p95=nearest rank\n";
  for (const auto& t : res.texts) {
    const std::string k = "# text." + t.name + ".";
    out << k << "tokens=" << t.stream.size() << '\n';
    out << k << "chars=" << t.stream.total_chars() << '\n';
    out << k << "char_convention=" << to_string(t.stream.convention()) << '\n';
    out << k << "vocab_size=" << t.predictor.vocab_size << '\n';
    if (t.predictor.trace) out << k << "model=" << t.predictor.trace->header.model << '\n';
    out << k << "mean_chars_per_token=" << fmt(t.stream.mean_chars_per_token().to_double()) << '\n';
    out << k << "l_sh_bpc=" << fmt(t.l_sh().to_double()) << '\n';
    out << k << "C_alpha1_bps=" << fmt(t.channel_rate(Rational(1)).to_double()) << '\n';
  }
}

inline void write_bits_csv(std::ostream& out, const SweepResult& res) {
  write_metadata(out, res);
  out << "text,coder,bits_per_token,bpc,overhead_pct,tokens,total_bits,status\n";
  for (const auto& r : res.bits) {
    out << csv_field(r.text) << ',' << r.coder << ',';
    if (r.error.empty())
      out << fmt(r.bits_per_token) << ',' << fmt(r.bpc) << ',' << fmt(r.overhead_pct, 3) << ',' << r.tokens << ','
          << fmt(r.total_bits, 3) << ",ok\n";
    else
      out << ",,," << r.tokens << ",," << csv_field("error: " + r.error) << '\n';
  }
}

inline void write_delays_csv(std::ostream& out, const SweepResult& res) {
  write_metadata(out, res);
  out << "text,coder,alpha,C_bps,mean_delay_s,p95_delay_s,stable,max_delay_s,status\n";
  for (const auto& r : res.runs) {
    out << csv_field(r.text) << ',' << r.coder << ',' << r.alpha_text << ',' << fmt(r.rate_bps.to_double()) << ',';
    if (r.error.empty())
      out << fmt(r.mean_delay) << ',' << fmt(r.p95_delay) << ',' << (r.stable ? 1 : 0) << ',' << fmt(r.max_delay)
          << ",ok\n";
    else
      out << ",,,," << csv_field("error: " + r.error) << '\n';
  }
}

/// Writes bits.csv and delays.csv into `dir` (created if needed).
inline void write_results(const SweepResult& res, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, auto fn) {
    std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
    if (!out) throw Error("cannot write " + name + " in '" + dir + "'");
    fn(out, res);
  };
  write("bits.csv", write_bits_csv);
  write("delays.csv", write_delays_csv);
}

}  // namespace streamcode
