#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "support.hpp"

using namespace streamcode;

namespace {

double kl(std::span<const double> p, const std::vector<std::uint32_t>& f, int precision) {
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) d += p[i] * std::log2(p[i] / std::ldexp(double(f[i]), -precision));
  return d;
}

// Every assignment of integer frequencies >= 1 summing to 2^F; returns the KL minimum.
std::vector<std::uint32_t> brute_force_quantize(std::span<const double> p, int precision) {
  const std::uint32_t total = 1u << precision;
  std::vector<std::uint32_t> cur(p.size()), best;
  double best_kl = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::uint32_t)> rec = [&](std::size_t i, std::uint32_t left) {
    if (i + 1 == p.size()) {
      if (left < 1) return;
      cur[i] = left;
      double d = kl(p, cur, precision);
      if (d < best_kl - 1e-15) best_kl = d, best = cur;
      return;
    }
    for (std::uint32_t f = 1; f + (p.size() - i - 1) <= left; ++f) {
      cur[i] = f;
      rec(i + 1, left - f);
    }
  };
  rec(0, total);
  return best;
}

PredictorSpec spec(PredictorKind kind, std::size_t v, int f = 14) {
  PredictorSpec s;
  s.kind = kind;
  s.vocab_size = v;
  s.precision = f;
  return s;
}

}  // namespace

TEST(Quantize, SpecExamples) {
  std::vector<double> half{0.5, 0.5};
  EXPECT_EQ(quantize(half, 4).freqs(), (std::vector<std::uint32_t>{8, 8}));
  std::vector<double> p{0.7, 0.2, 0.1};
  EXPECT_EQ(quantize(p, 4).freqs(), (std::vector<std::uint32_t>{11, 3, 2}));
  EXPECT_EQ(brute_force_quantize(p, 4), (std::vector<std::uint32_t>{11, 3, 2}));
}

TEST(Quantize, MatchesBruteForceKlOptimumOnSmallCases) {
  std::mt19937_64 rng(testing_support::seed(2));
  int agree = 0, cases = 300;
  double worst_gap = 0;
  for (int c = 0; c < cases; ++c) {
    std::size_t v = 2 + rng() % 3;
    int f = 4 + int(rng() % 3);
    auto p = testing_support::random_probs(rng, v, c % 2 == 0);
    auto got = quantize(p, f).freqs();
    auto best = brute_force_quantize(p, f);
    double gap = kl(p, got, f) - kl(p, best, f);
    EXPECT_GE(gap, -1e-12);
    worst_gap = std::max(worst_gap, gap);
    agree += got == best;
  }
  // Largest remainder is not KL-optimal in general; it must stay close.
  EXPECT_GT(agree, cases * 3 / 4);
  EXPECT_LT(worst_gap, 0.05);
}

TEST(Quantize, InvariantsOnRandomVectors) {
  std::mt19937_64 rng(testing_support::seed(3));
  for (int c = 0; c < 200; ++c) {
    std::size_t v = 2 + rng() % 4096;
    int f = 14;
    auto p = testing_support::random_probs(rng, v, c % 2 == 0);
    auto q = quantize(p, f);
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < v; ++i) {
      EXPECT_GE(q.freq(TokenId(i)), 1u);
      sum += q.freq(TokenId(i));
    }
    EXPECT_EQ(sum, 1u << f);
  }
}

TEST(Quantize, ZeroProbabilityStaysZeroAndErrorsAreReported) {
  std::vector<double> p{0.5, 0.0, 0.5};
  auto q = quantize(p, 4);
  EXPECT_EQ(q.freq(1), 0u);
  EXPECT_EQ(q.support_size(), 2u);
  std::vector<double> bad{0.5, 0.6};
  EXPECT_THROW(quantize(bad, 4), UsageError);
  std::vector<double> wide(20, 0.05);
  EXPECT_THROW(quantize(wide, 4), UsageError);
  std::vector<double> half{0.5, 0.5};
  EXPECT_THROW(quantize(half, 25), UsageError);
}

TEST(Predictor, UniformGivesEqualFrequencies) {
  auto p = make_predictor(spec(PredictorKind::Uniform, 256));
  auto q = p->next_pmf();
  for (std::size_t i = 0; i < 256; ++i) EXPECT_EQ(q.freq(TokenId(i)), 64u);
}

TEST(Predictor, UnigramAfterThreeObservations) {
  auto s = spec(PredictorKind::UnigramAdaptive, 2, 8);
  s.delta = 1;
  auto p = make_predictor(s);
  for (int i = 0; i < 3; ++i) p->update(0);
  EXPECT_EQ(p->next_pmf().freqs(), (std::vector<std::uint32_t>{205, 51}));
  EXPECT_EQ(p->position(), 3u);
}

TEST(Predictor, UpdateIncrementsCount) {
  NgramPredictor p(8, 1, 0.5, 14);
  EXPECT_EQ(p.count({}, 5), 0u);
  p.update(5);
  EXPECT_EQ(p.count({}, 5), 1u);
  EXPECT_THROW(p.update(8), UsageError);
}

TEST(Predictor, NgramBacksOffToLongestSeenContext) {
  NgramPredictor p(4, 2, 0.01, 14);
  for (TokenId t : {0u, 1u, 0u, 1u, 0u}) p.update(t);
  // After 0 the bigram table has only seen 1.
  auto probs = p.probabilities();
  EXPECT_GT(probs[1], 0.9);
  p.update(3);  // context 3 is unseen: fall back to unigram counts
  probs = p.probabilities();
  EXPECT_NEAR(probs[0], (3 + 0.01) / (6 + 0.04), 1e-12);
}

TEST(Predictor, QuantizationFidelityOnExcerpt) {
  auto text = read_file(testing_support::data_path("excerpts/alice.txt"));
  auto s = tokenize(text, TokenizerSpec::parse("word"), Rational(20));
  NgramPredictor p(s.vocab_size(), 3, 0.05, 14);
  double worst = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto raw = p.probabilities();
    auto q = p.next_pmf();
    worst = std::max(worst, kl(raw, q.freqs(), 14));
    p.update(s[i].token);
  }
  EXPECT_LT(worst, 0.05);
}

TEST(Predictor, TraceReplayQuantizesDyadicEntries) {
  auto trace = std::make_shared<Trace>();
  trace->header.vocab_size = 4;
  TraceRecord r;
  r.token = 3;
  r.entries = {{3, 0.5}, {1, 0.25}};
  r.tail_mass = 0.25;
  trace->records.push_back(r);
  auto s = spec(PredictorKind::TraceReplay, 4, 8);
  s.trace = trace;
  auto p = make_predictor(s);
  EXPECT_EQ(p->next_pmf().freqs(), (std::vector<std::uint32_t>{32, 64, 32, 128}));
  p->update(3);
  EXPECT_THROW(p->next_pmf(), Error);
}

TEST(Predictor, ClonesAreIndependent) {
  NgramPredictor p(16, 2, 0.1, 14);
  p.update(3);
  auto c = p.clone();
  p.update(4);
  EXPECT_EQ(c->position(), 1u);
  EXPECT_EQ(p.position(), 2u);
}

TEST(CrossEntropy, Examples) {
  auto text = tokenize("abcabcab", TokenizerSpec::parse("char"), Rational(20));
  auto ce = cross_entropy(text, spec(PredictorKind::Uniform, 256));
  EXPECT_DOUBLE_EQ(ce.bits_per_token(), 8.0);
  EXPECT_DOUBLE_EQ(ce.bits_per_char(), 8.0);

  auto trace = std::make_shared<Trace>();
  trace->header.vocab_size = 4;
  TraceRecord a, b;
  a.position = 0, a.token = 0, a.entries = {{0, 0.5}}, a.tail_mass = 0.5, a.surface = "x";
  b.position = 1, b.token = 1, b.entries = {{1, 0.25}, {2, 0.5}}, b.tail_mass = 0.25, b.surface = "y";
  trace->records = {a, b};
  auto s = spec(PredictorKind::TraceReplay, 4, 8);
  s.trace = trace;
  auto ce2 = cross_entropy(stream_from_trace(*trace, Rational(20)), s);
  EXPECT_DOUBLE_EQ(ce2.bits_per_token(), 1.5);
}

TEST(CrossEntropy, BitsPerCharScalesByCharsPerToken) {
  const auto& f = testing_support::fixture();
  auto ce = cross_entropy(f.stream, f.predictor);
  EXPECT_NEAR(ce.bits_per_char(), ce.bits_per_token() / f.stream.mean_chars_per_token().to_double(), 1e-12);
}
