#pragma once

// Streaming arithmetic coder over P-bit code values (P = 32 or 64) with
// pending-bit carry handling, and a decoder that reports for every token the
// number of channel bits it had to consume before committing to it.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "streamcode/bitbuffer.hpp"
#include "streamcode/errors.hpp"
#include "streamcode/exact.hpp"
#include "streamcode/pmf.hpp"

namespace streamcode {

namespace detail {

struct AcBounds {
  explicit AcBounds(int precision) : precision(precision) {
    if (precision != 32 && precision != 64) throw UsageError("arithmetic coder precision must be 32 or 64");
    top = (uint128{1} << precision) - 1;
    half = uint128{1} << (precision - 1);
    quarter = uint128{1} << (precision - 2);
  }
  int precision;
  uint128 top, half, quarter;
};

// Narrows [low, high] to the symbol's share of the interval.
inline void ac_narrow(uint128& low, uint128& high, const QuantizedPmf& pmf, TokenId s) {
  const uint128 range = high - low + 1;
  const int f = pmf.precision();
  high = low + ((range * pmf.cum(s + 1)) >> f) - 1;
  low = low + ((range * pmf.cum(s)) >> f);
}

}  // namespace detail

class AcEncoder {
 public:
  explicit AcEncoder(int precision = 64) : b_(precision), high_(b_.top) {}

  int precision() const { return b_.precision; }

  /// Codes one token; bits released by this step are tagged with `step`.
  void encode(const QuantizedPmf& pmf, TokenId token, std::size_t step) {
    if (finished_) throw Error("arithmetic encoder already finished");
    if (token >= pmf.size() || pmf.freq(token) == 0) throw ZeroFrequencyError(step);
    if (pmf.precision() > b_.precision - 2) throw UsageError("frequency precision too large for the code value width");
    last_step_ = step;
    detail::ac_narrow(low_, high_, pmf, token);
    for (;;) {
      if (high_ < b_.half) {
        emit(false, step);
      } else if (low_ >= b_.half) {
        emit(true, step);
        low_ -= b_.half;
        high_ -= b_.half;
      } else if (low_ >= b_.quarter && high_ < b_.half + b_.quarter) {
        ++pending_;
        low_ -= b_.quarter;
        high_ -= b_.quarter;
      } else {
        break;
      }
      low_ <<= 1;
      high_ = (high_ << 1) | 1;
    }
  }

  /// Two disambiguating bits (plus pending). The decoder zero-pads past the end.
  void finish() {
    if (finished_) return;
    finished_ = true;
    ++pending_;
    emit(low_ >= b_.quarter, last_step_);
  }

  const BitBuffer& bits() const { return bits_; }
  /// Step index that released each bit.
  const std::vector<std::size_t>& bit_steps() const { return steps_; }
  std::uint64_t pending() const { return pending_; }

 private:
  void emit(bool bit, std::size_t step) {
    push(bit, step);
    for (; pending_ > 0; --pending_) push(!bit, step);
  }
  void push(bool bit, std::size_t step) {
    bits_.push(bit);
    steps_.push_back(step);
  }

  detail::AcBounds b_;
  uint128 low_ = 0, high_;
  std::uint64_t pending_ = 0;
  BitBuffer bits_;
  std::vector<std::size_t> steps_;
  std::size_t last_step_ = 0;
  bool finished_ = false;
};

class AcDecoder {
 public:
  /// Reads the first P bits (zero-padded when the stream is shorter).
  AcDecoder(const BitBuffer& bits, int precision = 64) : b_(precision), in_(bits), high_(b_.top) {
    for (int i = 0; i < precision; ++i) value_ = (value_ << 1) | (in_.read_padded() ? 1u : 0u);
  }

  TokenId decode(const QuantizedPmf& pmf) {
    if (pmf.precision() > b_.precision - 2) throw UsageError("frequency precision too large for the code value width");
    const uint128 range = high_ - low_ + 1;
    if (value_ < low_ || value_ > high_) throw CorruptStreamError("code value left the interval", in_.position());
    const uint128 count = (((value_ - low_ + 1) << pmf.precision()) - 1) / range;
    if (count >= pmf.total()) throw CorruptStreamError("code value outside every symbol interval", in_.position());
    TokenId s = pmf.symbol_for(static_cast<std::uint32_t>(count));
    uint128 lo = low_, hi = high_;
    detail::ac_narrow(lo, hi, pmf, s);
    // Integer rounding can put the value one symbol off; settle on the interval that holds it.
    while (value_ < lo && s > 0) {
      lo = low_, hi = high_;
      detail::ac_narrow(lo, hi, pmf, --s);
    }
    while (value_ > hi && s + 1 < pmf.size()) {
      lo = low_, hi = high_;
      detail::ac_narrow(lo, hi, pmf, ++s);
    }
    if (value_ < lo || value_ > hi || pmf.freq(s) == 0)
      throw CorruptStreamError("code value outside every symbol interval", in_.position());
    betas_.push_back(std::min<std::uint64_t>(in_.position(), in_.size()));
    low_ = lo;
    high_ = hi;
    for (;;) {
      if (high_ < b_.half) {
      } else if (low_ >= b_.half) {
        low_ -= b_.half, high_ -= b_.half, value_ -= b_.half;
      } else if (low_ >= b_.quarter && high_ < b_.half + b_.quarter) {
        low_ -= b_.quarter, high_ -= b_.quarter, value_ -= b_.quarter;
      } else {
        break;
      }
      low_ <<= 1;
      high_ = (high_ << 1) | 1;
      value_ = (value_ << 1) | (in_.read_padded() ? 1u : 0u);
    }
    return s;
  }

  /// Bits consumed (capped at the stream length) when each token was resolved.
  const std::vector<std::uint64_t>& betas() const { return betas_; }
  std::uint64_t bits_consumed() const { return in_.position(); }

 private:
  detail::AcBounds b_;
  BitReader in_;
  uint128 low_ = 0, high_;
  uint128 value_ = 0;
  std::vector<std::uint64_t> betas_;
};

/// Encodes a whole sequence; pmfs[i] is the model for tokens[i].
inline BitBuffer ac_encode(const std::vector<QuantizedPmf>& pmfs, const std::vector<TokenId>& tokens,
                           int precision = 64) {
  if (pmfs.size() != tokens.size()) throw UsageError("one PMF per token required");
  AcEncoder enc(precision);
  for (std::size_t i = 0; i < tokens.size(); ++i) enc.encode(pmfs[i], tokens[i], i);
  enc.finish();
  return enc.bits();
}

inline std::vector<TokenId> ac_decode(const BitBuffer& bits, const std::vector<QuantizedPmf>& pmfs,
                                      int precision = 64) {
  AcDecoder dec(bits, precision);
  std::vector<TokenId> out;
  out.reserve(pmfs.size());
  for (const auto& p : pmfs) out.push_back(dec.decode(p));
  return out;
}

}  // namespace streamcode
