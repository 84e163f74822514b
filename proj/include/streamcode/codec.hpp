#pragma once

// Whole-stream encode/decode and the on-disk container.
//
//   STREAMCODE 1
//   key=value lines (coder, predictor, tokenizer, token count, payload bits, crc32, ...)
//   surface <id> <hex>   one per token id used
//   <empty line>
//   payload bytes (MSB-first bits, zero-padded)
//
// The header is side information and is not part of any bit-cost figure.

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <istream>
#include <iterator>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "streamcode/bitbuffer.hpp"
#include "streamcode/coder_ac.hpp"
#include "streamcode/coder_core.hpp"
#include "streamcode/coder_deflate.hpp"
#include "streamcode/coder_rans.hpp"
#include "streamcode/corpus.hpp"
#include "streamcode/predictor.hpp"
#include "streamcode/trace.hpp"

namespace streamcode {

inline bool encodable(const CoderSpec& c) {
  return c.kind == CoderKind::HuffmanExact || c.kind == CoderKind::Arithmetic || c.kind == CoderKind::Rans ||
         c.kind == CoderKind::DeflateFlush;
}

inline void require_encodable(const CoderSpec& c) {
  if (!encodable(c)) throw UsageError("coder '" + c.id() + "' only accounts bits and produces no bitstream");
}

/// Bitstream for the whole token stream.
inline BitBuffer encode_stream(const TokenStream& stream, const PredictorSpec& pspec, const CoderSpec& coder) {
  require_encodable(coder);
  if (coder.kind == CoderKind::DeflateFlush) {
    std::vector<std::string> surfaces(stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) surfaces[i] = stream.surface(i);
    std::vector<std::uint8_t> bytes;
    deflate_ledger(surfaces, coder.deflate_level, &bytes);
    return BitBuffer::from_bytes(bytes, bytes.size() * 8);
  }
  auto predictor = make_predictor(pspec);
  BitBuffer out;
  AcEncoder ac(coder.ac_precision);
  std::vector<TokenId> block;
  std::vector<QuantizedPmf> pmfs;
  std::size_t block_first = 0;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    QuantizedPmf pmf = predictor->next_pmf();
    TokenId x = stream[i].token;
    switch (coder.kind) {
      case CoderKind::HuffmanExact: out.append(huffman_exact(pmf).encode(x, i)); break;
      case CoderKind::Arithmetic: ac.encode(pmf, x, i); break;
      case CoderKind::Rans:
        block.push_back(x);
        pmfs.push_back(std::move(pmf));
        if (block.size() == coder.rans.block_size || i + 1 == stream.size()) {
          out.append(rans_encode_block(block, pmfs, coder.rans, block_first));
          block_first = i + 1;
          block.clear();
          pmfs.clear();
        }
        break;
      default: break;
    }
    predictor->update(x);
  }
  if (coder.kind == CoderKind::Arithmetic) {
    ac.finish();
    out = ac.bits();
  }
  return out;
}

/// Recovers `count` token ids. Deflate payloads decode to text instead (inflate_all).
inline std::vector<TokenId> decode_stream(const BitBuffer& bits, std::size_t count, const PredictorSpec& pspec,
                                          const CoderSpec& coder) {
  require_encodable(coder);
  if (coder.kind == CoderKind::DeflateFlush) throw UsageError("deflate payloads decode to text, not token ids");
  auto predictor = make_predictor(pspec);
  std::vector<TokenId> out;
  out.reserve(count);
  BitReader in(bits);
  std::unique_ptr<AcDecoder> ac;
  std::unique_ptr<RansBlockDecoder> rans;
  if (coder.kind == CoderKind::Arithmetic) ac = std::make_unique<AcDecoder>(bits, coder.ac_precision);
  for (std::size_t i = 0; i < count; ++i) {
    QuantizedPmf pmf = predictor->next_pmf();
    TokenId x = 0;
    switch (coder.kind) {
      case CoderKind::HuffmanExact: x = huffman_exact(pmf).decode(in); break;
      case CoderKind::Arithmetic: x = ac->decode(pmf); break;
      case CoderKind::Rans:
        if (i % coder.rans.block_size == 0) rans = std::make_unique<RansBlockDecoder>(in, coder.rans);
        x = rans->decode(pmf);
        if ((i + 1) % coder.rans.block_size == 0 || i + 1 == count) rans->finish();
        break;
      default: break;
    }
    if (x >= pspec.vocab_size) throw CorruptStreamError("decoded token outside vocabulary", in.position());
    out.push_back(x);
    predictor->update(x);
  }
  if (coder.kind != CoderKind::Arithmetic && !in.exhausted())
    throw CorruptStreamError("trailing bits after the last token", in.position());
  return out;
}

inline std::uint32_t crc32_of(std::string_view s) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

struct Container {
  std::map<std::string, std::string> header;
  std::map<TokenId, std::string> surfaces;
  BitBuffer payload;

  const std::string& get(const std::string& key) const {
    auto it = header.find(key);
    if (it == header.end()) throw ParseError("container header lacks '" + key + "'", 0);
    return it->second;
  }
};

inline void write_container(std::ostream& out, const Container& c) {
  out << "STREAMCODE 1\n";
  for (const auto& [k, v] : c.header) out << k << '=' << v << '\n';
  for (const auto& [id, s] : c.surfaces) out << "surface " << id << ' ' << hex_encode(s) << '\n';
  out << '\n';
  auto bytes = c.payload.to_bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline Container read_container(std::istream& in) {
  Container c;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != "STREAMCODE 1") throw ParseError("not a streamcode container", 1);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) break;
    if (line.starts_with("surface ")) {
      auto sp = line.find(' ', 8);
      TokenId id;
      if (sp == std::string::npos || !detail::parse_number(std::string_view(line).substr(8, sp - 8), id))
        throw ParseError("malformed surface line", line_no);
      auto s = hex_decode(std::string_view(line).substr(sp + 1));
      if (!s) throw ParseError("malformed surface hex", line_no);
      c.surfaces[id] = *s;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("malformed header line", line_no);
    c.header[line.substr(0, eq)] = line.substr(eq + 1);
  }
  std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t nbits = 0;
  if (!detail::parse_number(c.get("payload_bits"), nbits)) throw ParseError("bad payload_bits", 0);
  std::vector<std::uint8_t> bytes(rest.begin(), rest.end());
  if (bytes.size() != (nbits + 7) / 8) throw CorruptStreamError("payload length does not match payload_bits", bytes.size() * 8);
  c.payload = BitBuffer::from_bytes(bytes, nbits);
  return c;
}

inline std::string crc_hex(std::uint32_t crc) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", crc);
  return buf;
}

}  // namespace streamcode
