#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace streamcode;

namespace {
TokenStream tok(std::string_view text, const char* kind, Rational rate = Rational(20)) {
  return tokenize(text, TokenizerSpec::parse(kind), rate);
}
}  // namespace

TEST(Tokenize, CharLevelClock) {
  auto s = tok("ab", "char");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].char_count, 1u);
  EXPECT_EQ(s[1].char_count, 1u);
  EXPECT_EQ(s.arrival_time(0), Rational(1, 20));
  EXPECT_EQ(s.arrival_time(1), Rational(1, 10));
  EXPECT_EQ(s[0].token, TokenId('a'));
  EXPECT_EQ(s.vocab_size(), 256u);
}

TEST(Tokenize, LongTextLastArrival) {
  std::string text(40'000, 'x');
  auto s = tok(text, "char");
  EXPECT_EQ(s.arrival_time(s.size() - 1), Rational(2000));
}

TEST(Tokenize, WordsCarryLeadingWhitespace) {
  auto s = tok("to be or", "word");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.surface(0), "to");
  EXPECT_EQ(s.surface(1), " be");
  EXPECT_EQ(s.surface(2), " or");
  EXPECT_EQ(s.total_chars(), 8);
  EXPECT_EQ(s.arrival_time(2), Rational(2, 5));
}

TEST(Tokenize, TextIsRecoveredByConcatenation) {
  std::string text = "  Call me Ishmael.\nSome years ago -- never mind how long  ";
  for (const char* kind : {"char", "word"}) EXPECT_EQ(tok(text, kind).text(), text) << kind;
}

TEST(Tokenize, RepeatedWordsShareIds) {
  auto s = tok("a a a b", "word");
  EXPECT_EQ(s[1].token, s[2].token);
  EXPECT_NE(s[0].token, s[1].token);  // "a" vs " a"
  EXPECT_NE(s[2].token, s[3].token);
}

TEST(Tokenize, Utf8ScalarsCountAsOneCharacter) {
  auto s = tok("h\xc3\xa9!", "char");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[1].char_count, 1u);
  EXPECT_EQ(s.convention(), CharConvention::Utf8Scalars);
  EXPECT_EQ(s[1].token, 256u);
}

TEST(Tokenize, InvalidUtf8FallsBackToBytes) {
  auto s = tok("a\xff" "b", "char");
  EXPECT_EQ(s.convention(), CharConvention::Bytes);
  EXPECT_EQ(s.size(), 3u);
  TokenizerSpec strict = TokenizerSpec::parse("char");
  strict.convention = CharConvention::Utf8Scalars;
  EXPECT_THROW(tokenize("a\xff", strict, Rational(20)), ParseError);
}

TEST(Tokenize, RejectsEmptyTextAndNonPositiveRate) {
  EXPECT_THROW(tok("", "word"), UsageError);
  EXPECT_THROW(tok("x", "word", Rational(0)), UsageError);
  EXPECT_THROW(tok("x", "word", Rational(-3)), UsageError);
  EXPECT_THROW(TokenizerSpec::parse("bpe"), UsageError);
}

TEST(Tokenize, PrefixKeepsClock) {
  auto s = tok("one two three four", "word");
  auto p = s.prefix(2);
  EXPECT_EQ(p.size(), 2u);
  EXPECT_EQ(p.arrival_time(1), s.arrival_time(1));
  EXPECT_EQ(p.text(), "one two");
}

TEST(TokenRate, Examples) {
  EXPECT_EQ(token_rate(Rational(20), Rational(4)), Rational(5));
  EXPECT_NEAR(token_rate(Rational(20), Rational::parse("3.84")).to_double(), 5.2083, 1e-4);
  EXPECT_EQ(token_rate(tok("abcdefghij", "word")), Rational(2));
  EXPECT_THROW(token_rate(Rational(20), Rational(0)), UsageError);
}

TEST(Trace, RoundtripsThroughText) {
  Trace t;
  t.header = {6, "word", "toy"};
  TraceRecord r;
  r.position = 0;
  r.token = 2;
  r.entries = {{2, 0.5}, {4, 0.25}};
  r.tail_mass = 0.25;
  r.surface = " hi";
  t.records.push_back(r);
  std::stringstream ss;
  write_trace(ss, t);
  Trace back = read_trace(ss);
  ASSERT_EQ(back.records.size(), 1u);
  EXPECT_EQ(back.header.vocab_size, 6u);
  EXPECT_EQ(back.records[0].entries, r.entries);
  EXPECT_EQ(back.records[0].surface, r.surface);
  auto s = stream_from_trace(back, Rational(20));
  EXPECT_EQ(s.arrival_time(0), Rational(3, 20));
}

TEST(Trace, MalformedInputIsDiagnosedWithLine) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_trace(in);
  };
  EXPECT_THROW(parse("nope\n"), ParseError);
  try {
    parse("#trace\tV=4\n0\t1\t1\t1:0.5\t0.4\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 2u);
  }
  EXPECT_THROW(parse("#trace\tV=4\n0\t9\t1\t9:1\t0\n"), ParseError);
  EXPECT_THROW(parse("#trace\tV=4\n1\t1\t1\t1:1\t0\n"), ParseError);
}

TEST(Fixture, HasCalibratedStatistics) {
  const auto& f = testing_support::fixture();
  EXPECT_EQ(f.stream.size(), 10'000u);
  EXPECT_NEAR(f.stream.mean_chars_per_token().to_double(), 4.0, 0.1);
  auto ce = cross_entropy(f.stream, f.predictor);
  EXPECT_GT(ce.bits_per_token(), 4.5);
  EXPECT_LT(ce.bits_per_token(), 6.0);
}
