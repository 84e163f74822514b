#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace streamcode;

namespace {

struct Text {
  TokenStream stream;
  PredictorSpec predictor;
};

Text excerpt(const char* name, std::size_t tokens) {
  Text t;
  t.stream = tokenize(read_file(testing_support::data_path(std::string("excerpts/") + name)),
                      TokenizerSpec::parse("word"), Rational(20))
                 .prefix(tokens);
  t.predictor.vocab_size = t.stream.vocab_size();
  return t;
}

}  // namespace

TEST(Codec, StreamsRoundtripForEveryBitstreamCoder) {
  auto t = excerpt("tale_of_two_cities.txt", 700);
  for (const char* id : {"huffman-exact", "ac", "ac-p32", "rans-k1", "rans-k8", "rans-k16"}) {
    auto c = CoderSpec::parse(id);
    auto bits = encode_stream(t.stream, t.predictor, c);
    EXPECT_EQ(decode_stream(bits, t.stream.size(), t.predictor, c), t.stream.ids()) << id;
  }
  auto d = CoderSpec::parse("deflate");
  EXPECT_EQ(inflate_all(encode_stream(t.stream, t.predictor, d).to_bytes()), t.stream.text());
  EXPECT_THROW(encode_stream(t.stream, t.predictor, CoderSpec::parse("shannon")), UsageError);
}

TEST(Codec, BitCountsMatchTheSweepLedger) {
  auto t = excerpt("alice.txt", 500);
  TextInput in{"alice", t.stream, nullptr};
  std::vector<std::string> ids{"huffman-exact", "ac", "rans-k8"};
  std::vector<CoderSpec> coders;
  for (const auto& id : ids) coders.push_back(CoderSpec::parse(id));
  auto run = code_text(in, t.predictor, coders);
  for (std::size_t k = 0; k < coders.size(); ++k)
    EXPECT_EQ(int128(encode_stream(t.stream, t.predictor, coders[k]).size()) << 32, run.ledgers[k].total_bits_q32)
        << ids[k];
}

TEST(Codec, ContainerRoundtrip) {
  Container c;
  c.header["coder"] = "ac";
  c.header["payload_bits"] = "11";
  c.surfaces[3] = " w\nx";
  c.payload = BitBuffer::from_string("10110011101");
  std::stringstream ss;
  write_container(ss, c);
  Container back = read_container(ss);
  EXPECT_EQ(back.header, c.header);
  EXPECT_EQ(back.surfaces, c.surfaces);
  EXPECT_EQ(back.payload.str(), c.payload.str());
}

TEST(Codec, MalformedContainersAreRejected) {
  std::istringstream bad_magic("NOPE\n\n");
  EXPECT_THROW(read_container(bad_magic), ParseError);
  std::istringstream short_payload("STREAMCODE 1\npayload_bits=20\n\nA");
  EXPECT_THROW(read_container(short_payload), CorruptStreamError);
  std::istringstream no_bits("STREAMCODE 1\ncoder=ac\n\n");
  EXPECT_THROW(read_container(no_bits), ParseError);
}

TEST(Codec, RansTruncationReportsPosition) {
  auto t = excerpt("alice.txt", 100);
  auto c = CoderSpec::parse("rans-k8");
  auto bits = encode_stream(t.stream, t.predictor, c);
  BitBuffer cut;
  auto s = bits.str();
  for (std::size_t i = 0; i + 5 < s.size(); ++i) cut.push(s[i] == '1');
  try {
    decode_stream(cut, t.stream.size(), t.predictor, c);
    FAIL();
  } catch (const CorruptStreamError& e) {
    EXPECT_LE(e.bit_position(), cut.size());
  }
}

TEST(Codec, Crc32KnownValue) { EXPECT_EQ(crc_hex(crc32_of("123456789")), "cbf43926"); }
