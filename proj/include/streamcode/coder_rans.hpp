#pragma once

// Block rANS. Each block of K tokens is encoded last-to-first into a 32-bit
// state that starts at its lower bound L = 2^(S-R), then flushed.
//
// Payload: final state (S bits, MSB first), then the renormalization words
// most recent first, so the decoder reads straight through.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "streamcode/bitbuffer.hpp"
#include "streamcode/coder_core.hpp"
#include "streamcode/errors.hpp"
#include "streamcode/exact.hpp"
#include "streamcode/pmf.hpp"

namespace streamcode {

struct RansBlock {
  std::size_t first_token = 0;  // index of the block's first token in the stream
  std::size_t count = 0;
  BitBuffer bits;
  Rational enqueue_time;  // arrival of the block's last token
};

namespace detail {

inline void check_rans(const RansParams& p, int precision) {
  if (p.state_bits != 32) throw UsageError("rANS state must be 32 bits");
  if (p.renorm_bits < 1 || p.renorm_bits > 16) throw UsageError("rANS renormalization chunk must be 1..16 bits");
  if (precision > p.state_bits - p.renorm_bits)
    throw UsageError("frequency precision F=" + std::to_string(precision) + " exceeds S-R");
}

}  // namespace detail

/// Encodes tokens[0..n) with pmfs[0..n) as one block.
inline BitBuffer rans_encode_block(std::span<const TokenId> tokens, std::span<const QuantizedPmf* const> pmfs,
                                   const RansParams& p = {}, std::size_t first_index = 0) {
  if (tokens.size() != pmfs.size()) throw UsageError("one PMF per token required");
  const std::uint64_t lower = std::uint64_t{1} << (p.state_bits - p.renorm_bits);
  const std::uint64_t mask = (std::uint64_t{1} << p.renorm_bits) - 1;
  std::uint64_t x = lower;
  std::vector<std::uint32_t> words;
  for (std::size_t k = tokens.size(); k-- > 0;) {
    const QuantizedPmf& pmf = *pmfs[k];
    detail::check_rans(p, pmf.precision());
    const TokenId s = tokens[k];
    if (s >= pmf.size() || pmf.freq(s) == 0) throw ZeroFrequencyError(first_index + k);
    const std::uint64_t f = pmf.freq(s), c = pmf.cum(s);
    const std::uint64_t x_max = (std::uint64_t{1} << (p.state_bits - pmf.precision())) * f;
    while (x >= x_max) {
      words.push_back(static_cast<std::uint32_t>(x & mask));
      x >>= p.renorm_bits;
    }
    x = ((x / f) << pmf.precision()) + (x % f) + c;
  }
  BitBuffer out;
  out.push_bits(x, p.state_bits);
  for (auto it = words.rbegin(); it != words.rend(); ++it) out.push_bits(*it, p.renorm_bits);
  return out;
}

inline BitBuffer rans_encode_block(std::span<const TokenId> tokens, std::span<const QuantizedPmf> pmfs,
                                   const RansParams& p = {}, std::size_t first_index = 0) {
  std::vector<const QuantizedPmf*> ptrs;
  ptrs.reserve(pmfs.size());
  for (const auto& q : pmfs) ptrs.push_back(&q);
  return rans_encode_block(tokens, std::span<const QuantizedPmf* const>(ptrs), p, first_index);
}

/// Forward decoder for one block read from a shared bit reader.
class RansBlockDecoder {
 public:
  RansBlockDecoder(BitReader& in, const RansParams& p = {}) : in_(&in), p_(p) {
    lower_ = std::uint64_t{1} << (p.state_bits - p.renorm_bits);
    x_ = in.read_bits(p.state_bits);
    if (x_ < lower_) throw CorruptStreamError("rANS state below its lower bound", in.position());
  }

  TokenId decode(const QuantizedPmf& pmf) {
    detail::check_rans(p_, pmf.precision());
    const std::uint64_t slot = x_ & ((std::uint64_t{1} << pmf.precision()) - 1);
    const TokenId s = pmf.symbol_for(static_cast<std::uint32_t>(slot));
    x_ = pmf.freq(s) * (x_ >> pmf.precision()) + slot - pmf.cum(s);
    while (x_ < lower_) x_ = (x_ << p_.renorm_bits) | in_->read_bits(p_.renorm_bits);
    return s;
  }

  /// A well-formed block returns the state to exactly L.
  void finish() const {
    if (x_ != lower_) throw CorruptStreamError("rANS block did not return to its initial state", in_->position());
  }

 private:
  BitReader* in_;
  RansParams p_;
  std::uint64_t lower_;
  std::uint64_t x_;
};

inline std::vector<TokenId> rans_decode_block(const BitBuffer& bits, std::span<const QuantizedPmf> pmfs,
                                              const RansParams& p = {}) {
  BitReader in(bits);
  RansBlockDecoder dec(in, p);
  std::vector<TokenId> out;
  out.reserve(pmfs.size());
  for (const auto& q : pmfs) out.push_back(dec.decode(q));
  dec.finish();
  if (!in.exhausted()) throw CorruptStreamError("trailing bits after rANS block", in.position());
  return out;
}

/// Encodes a whole stream in blocks of K; the last block may be shorter.
/// `arrivals[i]` is token i's arrival time.
inline std::vector<RansBlock> rans_encode_stream(std::span<const TokenId> tokens, std::span<const QuantizedPmf> pmfs,
                                                 std::span<const Rational> arrivals, const RansParams& p = {}) {
  if (tokens.size() != pmfs.size() || tokens.size() != arrivals.size())
    throw UsageError("tokens, PMFs and arrivals differ in length");
  std::vector<RansBlock> blocks;
  for (std::size_t first = 0; first < tokens.size(); first += p.block_size) {
    std::size_t n = std::min<std::size_t>(p.block_size, tokens.size() - first);
    RansBlock b;
    b.first_token = first;
    b.count = n;
    b.bits = rans_encode_block(tokens.subspan(first, n), pmfs.subspan(first, n), p, first);
    b.enqueue_time = arrivals[first + n - 1];
    blocks.push_back(std::move(b));
  }
  return blocks;
}

/// Expected wait of a block's first token for the rest of the block: (K-1) E[B] / lambda.
inline Rational rans_buffering_floor(std::uint32_t block_size, const Rational& mean_chars_per_token,
                                     const Rational& char_rate) {
  if (block_size == 0) throw UsageError("rANS block size must be >= 1");
  if (char_rate <= Rational(0)) throw UsageError("character rate must be positive");
  return Rational(std::int64_t(block_size) - 1) * mean_chars_per_token / char_rate;
}

}  // namespace streamcode
