#pragma once

// Coder contract plus the two zero-delay coders: ideal Shannon accounting and
// per-position Huffman (length law and exact canonical codes).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "streamcode/bitbuffer.hpp"
#include "streamcode/corpus.hpp"
#include "streamcode/errors.hpp"
#include "streamcode/exact.hpp"
#include "streamcode/pmf.hpp"
#include "streamcode/predictor.hpp"

namespace streamcode {

enum class CoderKind { Shannon, HuffmanFormula, HuffmanExact, Arithmetic, Rans, DeflateFlush };

struct RansParams {
  std::uint32_t block_size = 16;  // K
  int state_bits = 32;            // S
  int renorm_bits = 1;            // R
};

struct CoderSpec {
  CoderKind kind = CoderKind::Shannon;
  int ac_precision = 64;  // P
  RansParams rans;
  int deflate_level = -1;  // zlib default

  /// Parses coder ids: shannon, huffman-formula, huffman-exact, ac (P=64),
  /// ac-p32, ac-p64, rans-k<K>, deflate.
  static CoderSpec parse(std::string_view id) {
    CoderSpec s;
    if (id == "shannon") s.kind = CoderKind::Shannon;
    else if (id == "huffman-formula") s.kind = CoderKind::HuffmanFormula;
    else if (id == "huffman-exact" || id == "huffman") s.kind = CoderKind::HuffmanExact;
    else if (id == "ac" || id == "ac-p64") s.kind = CoderKind::Arithmetic;
    else if (id == "ac-p32") s.kind = CoderKind::Arithmetic, s.ac_precision = 32;
    else if (id == "deflate" || id == "gzip") s.kind = CoderKind::DeflateFlush;
    else if (id.starts_with("rans-k") || id.starts_with("rans-K")) {
      s.kind = CoderKind::Rans;
      std::uint32_t k = 0;
      auto digits = id.substr(6);
      if (digits.empty() || !detail::parse_number(digits, k) || k == 0)
        throw UsageError("bad rANS block size in '" + std::string(id) + "'");
      s.rans.block_size = k;
    } else if (id == "rans") {
      s.kind = CoderKind::Rans;
    } else {
      throw UsageError("unknown coder '" + std::string(id) + "'");
    }
    s.validate();
    return s;
  }

  void validate() const {
    if (kind == CoderKind::Arithmetic && ac_precision != 32 && ac_precision != 64)
      throw UsageError("arithmetic coder precision must be 32 or 64");
    if (kind == CoderKind::Rans) {
      if (rans.block_size == 0) throw UsageError("rANS block size must be >= 1");
      if (rans.state_bits != 32) throw UsageError("rANS state must be 32 bits");
      if (rans.renorm_bits < 1 || rans.renorm_bits > 16) throw UsageError("rANS renormalization chunk must be 1..16 bits");
    }
  }

  std::string id() const {
    switch (kind) {
      case CoderKind::Shannon: return "shannon";
      case CoderKind::HuffmanFormula: return "huffman-formula";
      case CoderKind::HuffmanExact: return "huffman-exact";
      case CoderKind::Arithmetic: return ac_precision == 64 ? "ac" : "ac-p" + std::to_string(ac_precision);
      case CoderKind::Rans: return "rans-k" + std::to_string(rans.block_size);
      case CoderKind::DeflateFlush: return "deflate";
    }
    return "?";
  }

  bool scalar() const {
    return kind == CoderKind::Shannon || kind == CoderKind::HuffmanFormula || kind == CoderKind::HuffmanExact;
  }
};

/// When a covered token becomes decodable.
struct Coverage {
  enum class Condition { LastBitOfUnit, ChannelBit };
  std::size_t token = 0;
  Condition condition = Condition::LastBitOfUnit;
  std::uint64_t channel_bit = 0;  // 1-based global bit index for ChannelBit
};

/// A run of bits entering the channel queue together.
struct CodedUnit {
  std::int64_t bits_q32 = 0;  // fractional only for Shannon
  BitBuffer bits;             // empty for accounting-only coders
  Rational enqueue_time;      // seconds
  std::vector<Coverage> covered;

  double bit_count() const { return q32_to_double(bits_q32); }
};

// ---- Shannon ----------------------------------------------------------------

inline double shannon_bits(const QuantizedPmf& pmf, TokenId token, std::size_t index = 0) {
  return q32_to_double(shannon_bits_q32(pmf.freq(token), pmf.precision(), index));
}

// ---- Huffman length law -----------------------------------------------------

/// max(1, ceil(-log2(freq / 2^F))), computed exactly on integers.
inline std::uint32_t huffman_formula_bits(const QuantizedPmf& pmf, TokenId token, std::size_t index = 0) {
  std::uint32_t f = pmf.freq(token);
  if (f == 0) throw ZeroFrequencyError(index);
  // F - log2 f is an integer for powers of two; otherwise it lies strictly
  // between F - floor_log - 1 and F - floor_log. Both cases ceil to F - floor_log.
  int ceil_bits = pmf.precision() - (31 - std::countl_zero(f));
  return static_cast<std::uint32_t>(std::max(1, ceil_bits));
}

// ---- Exact Huffman ----------------------------------------------------------

/// Canonical Huffman code for one position's PMF. Symbols with zero frequency
/// get no codeword (length 0).
class HuffmanCode {
 public:
  std::uint8_t length(TokenId s) const { return lengths_[s]; }
  std::uint64_t codeword(TokenId s) const { return codes_[s]; }
  const std::vector<std::uint8_t>& lengths() const { return lengths_; }
  std::size_t size() const { return lengths_.size(); }

  BitBuffer encode(TokenId s, std::size_t index = 0) const {
    if (s >= lengths_.size() || lengths_[s] == 0) throw ZeroFrequencyError(index);
    BitBuffer b;
    b.push_bits(codes_[s], lengths_[s]);
    return b;
  }

  /// Reads exactly one codeword.
  TokenId decode(BitReader& in) const {
    std::uint64_t code = 0;
    for (std::size_t len = 1; len < first_code_.size(); ++len) {
      code = (code << 1) | (in.read() ? 1u : 0u);
      std::uint64_t offset = code - first_code_[len];
      if (code >= first_code_[len] && offset < count_[len]) return sorted_[first_index_[len] + offset];
    }
    throw CorruptStreamError("bits are not a codeword", in.position());
  }

  /// Builds the code. Merge order is (weight, lowest contained id); canonical
  /// codewords are assigned by (length, id).
  static HuffmanCode build(const QuantizedPmf& pmf) {
    const std::size_t n = pmf.size();
    HuffmanCode code;
    code.lengths_.assign(n, 0);
    code.codes_.assign(n, 0);

    std::vector<TokenId> support;
    for (std::size_t i = 0; i < n; ++i)
      if (pmf.freq(TokenId(i)) > 0) support.push_back(TokenId(i));
    if (support.empty()) throw Error("Huffman code of an empty distribution");

    if (support.size() == 1) {
      code.lengths_[support[0]] = 1;
    } else {
      // Nodes 0..m-1 are leaves (support order); internal nodes follow.
      const std::size_t m = support.size();
      std::vector<std::uint32_t> parent(2 * m - 1, 0);
      using Key = std::tuple<std::uint64_t, TokenId, std::uint32_t>;  // weight, min id, node
      std::priority_queue<Key, std::vector<Key>, std::greater<>> heap;
      for (std::uint32_t i = 0; i < m; ++i) heap.emplace(pmf.freq(support[i]), support[i], i);
      std::uint32_t next = static_cast<std::uint32_t>(m);
      while (heap.size() > 1) {
        auto [wa, ida, a] = heap.top();
        heap.pop();
        auto [wb, idb, b] = heap.top();
        heap.pop();
        parent[a] = parent[b] = next;
        heap.emplace(wa + wb, std::min(ida, idb), next);
        ++next;
      }
      // Internal nodes are created after their children, so depths resolve top-down.
      const std::uint32_t root = next - 1;
      std::vector<std::uint8_t> depth(2 * m - 1, 0);
      for (std::uint32_t v = root; v-- > 0;) depth[v] = static_cast<std::uint8_t>(depth[parent[v]] + 1);
      for (std::uint32_t i = 0; i < m; ++i) code.lengths_[support[i]] = depth[i];
    }
    code.assign_canonical(support);
    return code;
  }

 private:
  void assign_canonical(std::vector<TokenId> support) {
    std::stable_sort(support.begin(), support.end(),
                     [&](TokenId a, TokenId b) { return lengths_[a] < lengths_[b]; });
    const std::size_t max_len = lengths_[support.back()];
    if (max_len > 63) throw Error("Huffman codeword longer than 63 bits");
    first_code_.assign(max_len + 1, 0);
    first_index_.assign(max_len + 1, 0);
    count_.assign(max_len + 1, 0);
    sorted_ = support;
    std::uint64_t c = 0;
    std::size_t prev_len = lengths_[support.front()];
    for (std::size_t k = 0; k < support.size(); ++k) {
      std::size_t len = lengths_[support[k]];
      c <<= (len - prev_len);
      if (count_[len] == 0) {
        first_code_[len] = c;
        first_index_[len] = k;
      }
      ++count_[len];
      codes_[support[k]] = c++;
      prev_len = len;
    }
    // Lengths with no codewords keep first_code = 0, count = 0 and never match.
  }

  std::vector<std::uint8_t> lengths_;
  std::vector<std::uint64_t> codes_;
  std::vector<std::uint64_t> first_code_;
  std::vector<std::size_t> first_index_;
  std::vector<std::size_t> count_;
  std::vector<TokenId> sorted_;
};

inline HuffmanCode huffman_exact(const QuantizedPmf& pmf) { return HuffmanCode::build(pmf); }

/// Expected codeword length under the PMF, in bits.
inline double expected_length(const HuffmanCode& code, const QuantizedPmf& pmf) {
  double e = 0;
  for (std::size_t i = 0; i < pmf.size(); ++i)
    e += std::ldexp(double(pmf.freq(TokenId(i))), -pmf.precision()) * code.length(TokenId(i));
  return e;
}

/// Entropy of the quantized PMF in bits.
inline double entropy(const QuantizedPmf& pmf) {
  double h = 0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    double p = std::ldexp(double(pmf.freq(TokenId(i))), -pmf.precision());
    if (p > 0) h -= p * std::log2(p);
  }
  return h;
}

// ---- Scalar coder contract --------------------------------------------------

/// One unit per token, enqueued at the token's arrival; decodable at the unit's last bit.
inline CodedUnit encode_token_scalar(const CoderSpec& spec, const QuantizedPmf& pmf, TokenId token,
                                     std::size_t index, const Rational& t_arr) {
  if (token >= pmf.size()) throw ParseError("token outside PMF support", index);
  CodedUnit u;
  u.enqueue_time = t_arr;
  u.covered.push_back({index, Coverage::Condition::LastBitOfUnit, 0});
  switch (spec.kind) {
    case CoderKind::Shannon:
      u.bits_q32 = shannon_bits_q32(pmf.freq(token), pmf.precision(), index);
      break;
    case CoderKind::HuffmanFormula:
      u.bits_q32 = std::int64_t(huffman_formula_bits(pmf, token, index)) << 32;
      break;
    case CoderKind::HuffmanExact:
      u.bits = huffman_exact(pmf).encode(token, index);
      u.bits_q32 = std::int64_t(u.bits.size()) << 32;
      break;
    default:
      throw UsageError("encode_token_scalar needs a scalar coder, got " + spec.id());
  }
  return u;
}

/// Decodes one exact-Huffman codeword from `in`.
inline TokenId decode_token_scalar(const CoderSpec& spec, const QuantizedPmf& pmf, BitReader& in) {
  if (spec.kind != CoderKind::HuffmanExact) throw UsageError("only huffman-exact produces decodable bits");
  return huffman_exact(pmf).decode(in);
}

}  // namespace streamcode
