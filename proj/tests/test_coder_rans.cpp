#include <gtest/gtest.h>

#include "support.hpp"

using namespace streamcode;

namespace {

RansParams params(std::uint32_t k, int r = 1) {
  RansParams p;
  p.block_size = k;
  p.renorm_bits = r;
  return p;
}

}  // namespace

TEST(Rans, RoundtripsRandomBlocksWithPartialTails) {
  std::mt19937_64 rng(testing_support::seed(20));
  for (std::uint32_t k : {1u, 2u, 4u, 8u, 16u})
    for (std::size_t v : {2u, 16u, 256u, 4096u})
      for (bool skewed : {false, true})
        for (int renorm : {1, 8, 16}) {
          std::size_t n = 1 + rng() % 70;  // usually leaves a partial final block
          std::vector<QuantizedPmf> pmfs;
          std::vector<TokenId> tokens;
          std::vector<Rational> arrivals;
          for (std::size_t i = 0; i < n; ++i) {
            pmfs.push_back(testing_support::random_pmf(rng, v, 14, skewed));
            tokens.push_back(testing_support::draw(rng, pmfs.back()));
            arrivals.push_back(Rational(std::int64_t(i + 1), 5));
          }
          auto p = params(k, renorm);
          auto blocks = rans_encode_stream(tokens, pmfs, arrivals, p);
          ASSERT_EQ(blocks.size(), (n + k - 1) / k);
          std::vector<TokenId> out;
          for (const auto& b : blocks) {
            EXPECT_EQ(b.enqueue_time, arrivals[b.first_token + b.count - 1]);
            auto ids = rans_decode_block(b.bits, std::span(pmfs).subspan(b.first_token, b.count), p);
            out.insert(out.end(), ids.begin(), ids.end());
          }
          EXPECT_EQ(out, tokens) << "K=" << k << " V=" << v << " R=" << renorm;
        }
}

TEST(Rans, SingleHalfProbabilityToken) {
  QuantizedPmf half(std::vector<std::uint32_t>{8192, 8192}, 14);
  std::vector<TokenId> t{1};
  std::vector<QuantizedPmf> q{half};
  // Bitwise renormalization: 32 state bits plus one information bit.
  EXPECT_EQ(rans_encode_block(t, q, params(1, 1)).size(), 33u);
  // 16-bit words start from a 16-bit state and fit the token without renormalizing.
  EXPECT_EQ(rans_encode_block(t, q, params(1, 16)).size(), 32u);
}

TEST(Rans, UniformPayloadIsExact) {
  auto uniform = quantize(std::vector<double>(256, 1.0 / 256), 14);
  std::mt19937_64 rng(testing_support::seed(21));
  std::vector<TokenId> t(16);
  for (auto& x : t) x = TokenId(rng() % 256);
  std::vector<QuantizedPmf> q(16, uniform);
  auto bits = rans_encode_block(t, q, params(16));
  EXPECT_EQ(bits.size(), 160u);
  EXPECT_EQ(rans_decode_block(bits, q, params(16)), t);
}

TEST(Rans, PerBlockOverheadIsAboutOneStateWord) {
  std::mt19937_64 rng(testing_support::seed(22));
  for (int r = 0; r < 200; ++r) {
    std::vector<QuantizedPmf> q;
    std::vector<TokenId> t;
    double sh = 0;
    for (int i = 0; i < 8; ++i) {
      q.push_back(testing_support::random_pmf(rng, 100, 14, r % 2 == 0));
      t.push_back(testing_support::draw(rng, q.back()));
      sh += shannon_bits(q.back(), t.back());
    }
    double gap = double(rans_encode_block(t, q, params(8)).size()) - sh;
    EXPECT_GT(gap, 30.9);
    EXPECT_LE(gap, 32.1);
  }
}

TEST(Rans, CorruptionAndTrailingBitsAreDetected) {
  std::mt19937_64 rng(testing_support::seed(23));
  std::vector<QuantizedPmf> q;
  std::vector<TokenId> t;
  for (int i = 0; i < 16; ++i) {
    q.push_back(testing_support::random_pmf(rng, 50, 14, false));
    t.push_back(testing_support::draw(rng, q.back()));
  }
  auto bits = rans_encode_block(t, q, params(16));
  auto longer = bits;
  longer.push(true);
  EXPECT_THROW(rans_decode_block(longer, q, params(16)), CorruptStreamError);
  int detected = 0;
  for (std::size_t pos = 0; pos < bits.size(); pos += 7) {
    auto s = bits.str();
    s[pos] = s[pos] == '1' ? '0' : '1';
    try {
      detected += rans_decode_block(BitBuffer::from_string(s), q, params(16)) != t;
    } catch (const CorruptStreamError&) {
      ++detected;
    }
  }
  EXPECT_EQ(detected, int((bits.size() + 6) / 7));
}

TEST(Rans, PrecisionMustFitUnderStateWindow) {
  QuantizedPmf q(std::vector<std::uint32_t>{1u << 23, 1u << 23}, 24);
  std::vector<TokenId> t{0};
  std::vector<QuantizedPmf> qs{q};
  EXPECT_NO_THROW(rans_encode_block(t, qs, params(1, 8)));
  EXPECT_THROW(rans_encode_block(t, qs, params(1, 9)), UsageError);
}

TEST(Rans, BufferingFloorExamples) {
  EXPECT_EQ(rans_buffering_floor(16, Rational(4), Rational(20)), Rational(3));
  EXPECT_EQ(rans_buffering_floor(1, Rational(4), Rational(20)), Rational(0));
  EXPECT_EQ(rans_buffering_floor(8, Rational::parse("3.84"), Rational(20)), Rational::parse("1.344"));
  EXPECT_THROW(rans_buffering_floor(0, Rational(4), Rational(20)), UsageError);
}
