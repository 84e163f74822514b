#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace streamcode;

TEST(Rational, ParsesDecimalsFractionsAndExponents) {
  EXPECT_EQ(Rational::parse("0.05"), Rational(1, 20));
  EXPECT_EQ(Rational::parse("3/12"), Rational(1, 4));
  EXPECT_EQ(Rational::parse("-2.5"), Rational(-5, 2));
  EXPECT_EQ(Rational::parse("1e3"), Rational(1000));
  EXPECT_EQ(Rational::parse("25e-2"), Rational(1, 4));
  EXPECT_EQ(Rational::parse("20").str(), "20");
  EXPECT_EQ(Rational(6, -4).str(), "-3/2");
}

TEST(Rational, RejectsMalformedText) {
  for (const char* bad : {"", "abc", "1/0", "1.2.3", "1e", "--1", "0x10"})
    EXPECT_THROW(Rational::parse(bad), Error) << bad;
}

TEST(Rational, ArithmeticIsExact) {
  Rational a(1, 3), b(1, 6);
  EXPECT_EQ(a + b, Rational(1, 2));
  EXPECT_EQ(a - b, Rational(1, 6));
  EXPECT_EQ(a * b, Rational(1, 18));
  EXPECT_EQ(a / b, Rational(2));
  EXPECT_TRUE(b < a);
  EXPECT_EQ(Rational(7, 2).floor(), 3);
  EXPECT_EQ(Rational(-7, 2).floor(), -4);
  EXPECT_THROW(a / Rational(0), Error);
}

TEST(Rational, OverflowThrows) {
  Rational big(int128{1} << 100, 1);
  EXPECT_THROW(big * big, Error);
}

TEST(Log2Q32, MatchesLibmWithinResolution) {
  std::mt19937_64 rng(testing_support::seed(1));
  for (std::uint64_t v : {1ull, 2ull, 3ull, 1024ull, 3277ull, 16383ull, (1ull << 40) + 7}) {
    double got = q32_to_double(int128(log2_q32(v)));
    EXPECT_NEAR(got, std::log2(double(v)), 1e-8) << v;
  }
  for (int i = 0; i < 2000; ++i) {
    std::uint64_t v = 1 + rng() % (1ull << 24);
    EXPECT_NEAR(q32_to_double(int128(log2_q32(v))), std::log2(double(v)), 1e-8) << v;
  }
  EXPECT_EQ(log2_q32(1), 0u);
  EXPECT_EQ(log2_q32(1ull << 13), std::uint64_t(13) << 32);
  EXPECT_THROW(log2_q32(0), Error);
}

TEST(BitBuffer, BytesRoundtripMsbFirst) {
  auto b = BitBuffer::from_string("1010000111");
  auto bytes = b.to_bytes();
  ASSERT_EQ(bytes.size(), 2u);
  EXPECT_EQ(bytes[0], 0xA1);
  EXPECT_EQ(bytes[1], 0xC0);
  EXPECT_EQ(BitBuffer::from_bytes(bytes, 10).str(), "1010000111");
  EXPECT_THROW(BitBuffer::from_bytes(bytes, 17), CorruptStreamError);
}

TEST(BitReader, TruncationIsDiagnosedAndPaddingIsZero) {
  auto b = BitBuffer::from_string("11");
  BitReader r(b);
  EXPECT_EQ(r.read_bits(2), 3u);
  EXPECT_TRUE(r.exhausted());
  EXPECT_FALSE(r.read_padded());
  BitReader r2(b);
  r2.read_bits(2);
  try {
    r2.read();
    FAIL() << "expected truncation";
  } catch (const CorruptStreamError& e) {
    EXPECT_EQ(e.bit_position(), 2u);
  }
}
