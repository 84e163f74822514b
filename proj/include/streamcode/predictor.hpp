#pragma once

// Sequential predictors supplying q(x_n | x_<n) as QuantizedPmfs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "streamcode/corpus.hpp"
#include "streamcode/errors.hpp"
#include "streamcode/exact.hpp"
#include "streamcode/pmf.hpp"
#include "streamcode/trace.hpp"

namespace streamcode {

enum class PredictorKind { Uniform, UnigramAdaptive, NgramAdaptive, TraceReplay };

struct PredictorSpec {
  PredictorKind kind = PredictorKind::NgramAdaptive;
  std::size_t vocab_size = 0;
  int precision = kDefaultPrecision;
  int order = 3;        // n-gram order k (context of k-1 tokens)
  double delta = 0.05;  // additive smoothing
  std::shared_ptr<const Trace> trace;

  static PredictorKind parse_kind(std::string_view s) {
    if (s == "uniform") return PredictorKind::Uniform;
    if (s == "unigram") return PredictorKind::UnigramAdaptive;
    if (s == "ngram") return PredictorKind::NgramAdaptive;
    if (s == "trace") return PredictorKind::TraceReplay;
    throw UsageError("unknown predictor '" + std::string(s) + "' (expected uniform, unigram, ngram, trace)");
  }

  std::string describe() const {
    switch (kind) {
      case PredictorKind::Uniform: return "uniform";
      case PredictorKind::UnigramAdaptive: return "unigram delta=" + format_probability(delta);
      case PredictorKind::NgramAdaptive:
        return "ngram order=" + std::to_string(order) + " delta=" + format_probability(delta);
      case PredictorKind::TraceReplay: return "trace model=" + (trace ? trace->header.model : std::string("?"));
    }
    return "?";
  }

  void validate() const {
    QuantizedPmf::check_precision(precision);
    if (vocab_size == 0) throw UsageError("predictor vocabulary size must be positive");
    if (vocab_size > (std::size_t{1} << precision))
      throw UsageError("vocabulary of " + std::to_string(vocab_size) + " does not fit F=" + std::to_string(precision));
    if ((kind == PredictorKind::NgramAdaptive || kind == PredictorKind::UnigramAdaptive) && !(delta > 0))
      throw UsageError("smoothing delta must be positive");
    if (kind == PredictorKind::NgramAdaptive && order < 1) throw UsageError("n-gram order must be >= 1");
    if (kind == PredictorKind::TraceReplay && !trace) throw UsageError("trace predictor needs a trace");
  }
};

/// A sequential model. `next_pmf` describes the position after every token
/// passed to `update` so far.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual QuantizedPmf next_pmf() const = 0;
  virtual void update(TokenId observed) = 0;
  virtual std::size_t position() const = 0;
  virtual std::unique_ptr<Predictor> clone() const = 0;
};

class UniformPredictor final : public Predictor {
 public:
  UniformPredictor(std::size_t vocab_size, int precision) {
    std::vector<double> p(vocab_size, 1.0 / double(vocab_size));
    pmf_ = quantize(p, precision);
  }
  QuantizedPmf next_pmf() const override { return pmf_; }
  void update(TokenId) override { ++position_; }
  std::size_t position() const override { return position_; }
  std::unique_ptr<Predictor> clone() const override { return std::make_unique<UniformPredictor>(*this); }

 private:
  QuantizedPmf pmf_;
  std::size_t position_ = 0;
};

/// Adaptive n-gram with additive smoothing,
///   q(x | ctx) = (c(ctx, x) + delta) / (c(ctx) + delta * V),
/// using the longest context (up to order-1 tokens) that has been seen and
/// backing off to shorter contexts otherwise. Order 1 is the adaptive unigram.
class NgramPredictor final : public Predictor {
 public:
  NgramPredictor(std::size_t vocab_size, int order, double delta, int precision)
      : vocab_size_(vocab_size), order_(order), delta_(delta), precision_(precision), tables_(order) {}

  QuantizedPmf next_pmf() const override { return quantize(probabilities(), precision_); }

  /// Smoothed distribution before quantization (backoff to the longest seen context).
  std::vector<double> probabilities() const {
    const ContextCounts* counts = nullptr;
    for (int len = std::min<int>(order_ - 1, int(history_.size())); len >= 0; --len) {
      auto it = tables_[len].find(context_key(len));
      if (it != tables_[len].end() && it->second.total > 0) {
        counts = &it->second;
        break;
      }
    }
    std::vector<double> probs(vocab_size_);
    double total = counts ? double(counts->total) : 0.0;
    double denom = total + delta_ * double(vocab_size_);
    double base = delta_ / denom;
    std::fill(probs.begin(), probs.end(), base);
    if (counts)
      for (auto [id, c] : counts->counts) probs[id] = (double(c) + delta_) / denom;
    return probs;
  }

  void update(TokenId observed) override {
    if (observed >= vocab_size_) throw UsageError("observed token outside vocabulary");
    for (int len = 0; len < order_ && len <= int(history_.size()); ++len) {
      auto& cell = tables_[len][context_key(len)];
      ++cell.counts[observed];
      ++cell.total;
    }
    history_.push_back(observed);
  }

  std::size_t position() const override { return history_.size(); }
  std::unique_ptr<Predictor> clone() const override { return std::make_unique<NgramPredictor>(*this); }

  /// Count of `token` after `context` (the context length selects the table).
  std::uint64_t count(std::span<const TokenId> context, TokenId token) const {
    if (context.size() >= std::size_t(order_)) return 0;
    auto it = tables_[context.size()].find(make_key(context));
    if (it == tables_[context.size()].end()) return 0;
    auto c = it->second.counts.find(token);
    return c == it->second.counts.end() ? 0 : c->second;
  }

  /// Number of distinct (context, token) cells across all orders.
  std::size_t cell_count() const {
    std::size_t n = 0;
    for (const auto& t : tables_)
      for (const auto& [k, v] : t) n += v.counts.size();
    return n;
  }

 private:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::unordered_map<TokenId, std::uint32_t> counts;
  };

  static std::string make_key(std::span<const TokenId> ctx) {
    return std::string(reinterpret_cast<const char*>(ctx.data()), ctx.size() * sizeof(TokenId));
  }
  std::string context_key(int len) const {
    return make_key(std::span<const TokenId>(history_).subspan(history_.size() - std::size_t(len)));
  }

  std::size_t vocab_size_;
  int order_;
  double delta_;
  int precision_;
  std::vector<std::unordered_map<std::string, ContextCounts>> tables_;
  std::vector<TokenId> history_;
};

/// Replays exported distributions record by record.
class TracePredictor final : public Predictor {
 public:
  TracePredictor(std::shared_ptr<const Trace> trace, int precision)
      : trace_(std::move(trace)), precision_(precision) {}

  QuantizedPmf next_pmf() const override {
    if (position_ >= trace_->records.size())
      throw Error("trace exhausted at position " + std::to_string(position_) + " (trace has " +
                  std::to_string(trace_->records.size()) + " records)");
    const auto& r = trace_->records[position_];
    return quantize_sparse(r.entries, r.tail_mass, trace_->header.vocab_size, precision_);
  }

  void update(TokenId) override { ++position_; }
  std::size_t position() const override { return position_; }
  std::unique_ptr<Predictor> clone() const override { return std::make_unique<TracePredictor>(*this); }

 private:
  std::shared_ptr<const Trace> trace_;
  int precision_;
  std::size_t position_ = 0;
};

inline std::unique_ptr<Predictor> make_predictor(const PredictorSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case PredictorKind::Uniform: return std::make_unique<UniformPredictor>(spec.vocab_size, spec.precision);
    case PredictorKind::UnigramAdaptive:
      return std::make_unique<NgramPredictor>(spec.vocab_size, 1, spec.delta, spec.precision);
    case PredictorKind::NgramAdaptive:
      return std::make_unique<NgramPredictor>(spec.vocab_size, spec.order, spec.delta, spec.precision);
    case PredictorKind::TraceReplay: return std::make_unique<TracePredictor>(spec.trace, spec.precision);
  }
  throw UsageError("unknown predictor kind");
}

/// -log2(freq / 2^F) in Q32 bits.
inline std::int64_t shannon_bits_q32(std::uint32_t freq, int precision, std::size_t token_index = 0) {
  if (freq == 0) throw ZeroFrequencyError(token_index);
  return (std::int64_t(precision) << 32) - std::int64_t(log2_q32(freq));
}

struct CrossEntropy {
  int128 total_bits_q32 = 0;
  std::size_t tokens = 0;
  std::int64_t chars = 0;
  double bits_per_token() const { return q32_to_double(total_bits_q32) / double(tokens); }
  double bits_per_char() const { return q32_to_double(total_bits_q32) / double(chars); }
};

/// Mean -log2 q-hat over the realized stream, computed on the quantized PMFs.
inline CrossEntropy cross_entropy(const TokenStream& stream, const PredictorSpec& spec) {
  if (stream.empty()) throw Error("cross entropy of an empty stream");
  auto predictor = make_predictor(spec);
  CrossEntropy ce;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    auto pmf = predictor->next_pmf();
    TokenId x = stream[i].token;
    if (x >= pmf.size()) throw ParseError("token outside predictor vocabulary", i);
    ce.total_bits_q32 += shannon_bits_q32(pmf.freq(x), pmf.precision(), i);
    predictor->update(x);
  }
  ce.tokens = stream.size();
  ce.chars = stream.total_chars();
  return ce;
}

}  // namespace streamcode
