#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "support.hpp"

using namespace streamcode;

namespace {

QuantizedPmf pmf_of(std::vector<std::uint32_t> f, int precision) { return QuantizedPmf(f, precision); }

// Minimal sum f_i * l_i over all prefix codes: enumerate non-decreasing length
// profiles obeying Kraft, paired with frequencies sorted descending.
std::uint64_t brute_force_min_cost(std::vector<std::uint32_t> f) {
  std::erase(f, 0u);
  std::sort(f.rbegin(), f.rend());
  const std::size_t n = f.size();
  if (n == 1) return f[0];
  std::uint64_t best = UINT64_MAX;
  std::vector<int> len(n);
  std::function<void(std::size_t, int, double)> rec = [&](std::size_t i, int min_len, double kraft) {
    if (i == n) {
      std::uint64_t cost = 0;
      for (std::size_t k = 0; k < n; ++k) cost += std::uint64_t(f[k]) * len[k];
      best = std::min(best, cost);
      return;
    }
    for (int l = min_len; l < int(n); ++l) {
      double k = kraft + std::ldexp(1.0, -l);
      if (k > 1.0 + 1e-12) continue;
      len[i] = l;
      rec(i + 1, l, k);
    }
  };
  rec(0, 1, 0.0);
  return best;
}

}  // namespace

TEST(CoderSpec, ParsesIdsAndRejectsUnknown) {
  EXPECT_EQ(CoderSpec::parse("ac").ac_precision, 64);
  EXPECT_EQ(CoderSpec::parse("ac-p32").ac_precision, 32);
  EXPECT_EQ(CoderSpec::parse("rans-k8").rans.block_size, 8u);
  EXPECT_EQ(CoderSpec::parse("rans").rans.block_size, 16u);
  EXPECT_EQ(CoderSpec::parse("huffman").id(), "huffman-exact");
  EXPECT_EQ(CoderSpec::parse("gzip").id(), "deflate");
  for (const char* bad : {"ac-p16", "rans-k0", "rans-kx", "lzma", ""}) EXPECT_THROW(CoderSpec::parse(bad), UsageError) << bad;
}

TEST(ShannonBits, Examples) {
  auto uniform = quantize(std::vector<double>(256, 1.0 / 256), 14);
  EXPECT_DOUBLE_EQ(shannon_bits(uniform, 7), 8.0);
  auto half = pmf_of({8192, 8192}, 14);
  EXPECT_DOUBLE_EQ(shannon_bits(half, 0), 1.0);
  auto fifth = pmf_of({3277, 16384 - 3277}, 14);
  EXPECT_NEAR(shannon_bits(fifth, 0), -std::log2(3277.0 / 16384), 1e-8);
  EXPECT_NEAR(shannon_bits(fifth, 0), 2.3218, 1e-4);
  auto zero = pmf_of({0, 16}, 4);
  EXPECT_THROW(shannon_bits(zero, 0, 17), ZeroFrequencyError);
}

TEST(HuffmanFormula, Examples) {
  EXPECT_EQ(huffman_formula_bits(pmf_of({14746, 1638}, 14), 0), 1u);  // 0.9
  EXPECT_EQ(huffman_formula_bits(pmf_of({8192, 8192}, 14), 0), 1u);
  EXPECT_EQ(huffman_formula_bits(pmf_of({3277, 13107}, 14), 0), 3u);  // 0.2
  EXPECT_EQ(huffman_formula_bits(pmf_of({1, 16383}, 14), 0), 14u);
  EXPECT_EQ(huffman_formula_bits(pmf_of({16384}, 14), 0), 1u);
}

TEST(HuffmanFormula, EqualsCeilOfShannonOnAllFrequencies) {
  for (std::uint32_t f = 1; f < 4096; ++f) {
    auto q = pmf_of({f, 4096 - f}, 12);
    double exact = std::max(1.0, std::ceil(-std::log2(double(f) / 4096) - 1e-12));
    EXPECT_EQ(huffman_formula_bits(q, 0), std::uint32_t(exact)) << f;
  }
}

TEST(HuffmanExact, Examples) {
  EXPECT_EQ(huffman_exact(pmf_of({8, 8}, 4)).lengths(), (std::vector<std::uint8_t>{1, 1}));
  EXPECT_EQ(huffman_exact(pmf_of({11, 3, 2}, 4)).lengths(), (std::vector<std::uint8_t>{1, 2, 2}));
  auto dyadic = pmf_of({8, 4, 2, 2}, 4);
  auto code = huffman_exact(dyadic);
  EXPECT_EQ(code.lengths(), (std::vector<std::uint8_t>{1, 2, 3, 3}));
  EXPECT_DOUBLE_EQ(expected_length(code, dyadic), 1.75);
  EXPECT_DOUBLE_EQ(entropy(dyadic), 1.75);
}

TEST(HuffmanExact, CanonicalCodewords) {
  auto code = huffman_exact(pmf_of({8, 4, 2, 2}, 4));
  EXPECT_EQ(code.encode(0).str(), "0");
  EXPECT_EQ(code.encode(1).str(), "10");
  EXPECT_EQ(code.encode(2).str(), "110");
  EXPECT_EQ(code.encode(3).str(), "111");
  auto bits = BitBuffer::from_string("110");
  BitReader r(bits);
  EXPECT_EQ(code.decode(r), 2u);

  auto two = huffman_exact(pmf_of({8, 8}, 4));
  auto zero = BitBuffer::from_string("0");
  BitReader r0(zero);
  EXPECT_EQ(two.decode(r0), 0u);
}

TEST(HuffmanExact, SingleSymbolGetsOneBit) {
  auto code = huffman_exact(pmf_of({0, 16, 0}, 4));
  EXPECT_EQ(code.length(1), 1u);
  EXPECT_EQ(code.length(0), 0u);
  EXPECT_THROW(code.encode(0, 5), ZeroFrequencyError);
}

TEST(HuffmanExact, OptimalAgainstBruteForceLengthProfiles) {
  std::mt19937_64 rng(testing_support::seed(4));
  for (int c = 0; c < 500; ++c) {
    std::size_t v = 2 + rng() % 7;
    auto q = testing_support::random_pmf(rng, v, 10, c % 2 == 0);
    auto code = huffman_exact(q);
    std::uint64_t cost = 0;
    double kraft = 0;
    for (std::size_t i = 0; i < v; ++i) {
      cost += std::uint64_t(q.freq(TokenId(i))) * code.length(TokenId(i));
      kraft += std::ldexp(1.0, -code.length(TokenId(i)));
    }
    EXPECT_LE(kraft, 1.0 + 1e-12);
    EXPECT_EQ(cost, brute_force_min_cost(q.freqs())) << "case " << c;
  }
}

TEST(HuffmanExact, ExpectedLengthBandOnFixture) {
  const auto& f = testing_support::fixture();
  auto p = make_predictor(f.predictor);
  for (std::size_t i = 0; i < 2000; ++i) {
    auto q = p->next_pmf();
    double h = entropy(q), l = expected_length(huffman_exact(q), q);
    EXPECT_GE(l, h - 1e-9) << i;
    EXPECT_LT(l, h + 1.0) << i;
    p->update(f.stream[i].token);
  }
}

TEST(HuffmanExact, RandomTokensRoundtrip) {
  std::mt19937_64 rng(testing_support::seed(5));
  auto q = testing_support::random_pmf(rng, 300, 14, true);
  auto code = huffman_exact(q);
  BitBuffer all;
  std::vector<TokenId> tokens;
  for (int i = 0; i < 1000; ++i) {
    tokens.push_back(testing_support::draw(rng, q));
    all.append(code.encode(tokens.back()));
  }
  BitReader r(all);
  for (auto t : tokens) EXPECT_EQ(code.decode(r), t);
  EXPECT_TRUE(r.exhausted());
}

TEST(ScalarCoder, UnitsCarryArrivalAndCost) {
  auto half = pmf_of({8192, 8192}, 14);
  auto u = encode_token_scalar(CoderSpec::parse("shannon"), half, 1, 0, Rational(1, 5));
  EXPECT_DOUBLE_EQ(u.bit_count(), 1.0);
  EXPECT_EQ(u.enqueue_time, Rational(1, 5));

  auto q = pmf_of({11, 3, 2}, 4);
  auto h = encode_token_scalar(CoderSpec::parse("huffman-exact"), q, 1, 0, Rational(0));
  EXPECT_EQ(h.bits.str(), "10");
  BitReader r(h.bits);
  EXPECT_EQ(decode_token_scalar(CoderSpec::parse("huffman-exact"), q, r), 1u);

  auto nine = pmf_of({14746, 1638}, 14);
  EXPECT_DOUBLE_EQ(encode_token_scalar(CoderSpec::parse("huffman-formula"), nine, 0, 0, Rational(0)).bit_count(), 1.0);
  EXPECT_THROW(encode_token_scalar(CoderSpec::parse("ac"), nine, 0, 0, Rational(0)), UsageError);
}
