#pragma once

// Exact arithmetic used for the synthetic clock and bit ledgers:
// a checked 128-bit rational and a deterministic fixed-point log2.

#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "streamcode/errors.hpp"

namespace streamcode {

using int128 = __int128;
using uint128 = unsigned __int128;

// Bit counts are carried in Q32 fixed point (units of 2^-32 bit).
inline constexpr std::int64_t kQ32One = std::int64_t{1} << 32;

namespace detail {

inline int128 checked_mul(int128 a, int128 b) {
  int128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error("128-bit overflow in exact arithmetic");
  return r;
}

inline int128 checked_add(int128 a, int128 b) {
  int128 r;
  if (__builtin_add_overflow(a, b, &r)) throw Error("128-bit overflow in exact arithmetic");
  return r;
}

inline int128 abs128(int128 v) { return v < 0 ? -v : v; }

inline int128 gcd128(int128 a, int128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline int128 lcm128(int128 a, int128 b) {
  if (a == 0 || b == 0) return 0;
  return checked_mul(a / gcd128(a, b), b);
}

}  // namespace detail

inline std::string to_string(int128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  uint128 u = neg ? uint128(-(v + 1)) + 1 : uint128(v);
  std::string s;
  while (u != 0) {
    s.insert(s.begin(), char('0' + int(u % 10)));
    u /= 10;
  }
  if (neg) s.insert(s.begin(), '-');
  return s;
}

/// Exact rational number with a normalized 128-bit numerator and positive
/// denominator. Every operation checks for overflow and throws rather than wrap.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT(implicit)
  Rational(int128 n, int128 d) : num_(n), den_(d) {
    if (d == 0) throw Error("rational with zero denominator");
    normalize();
  }

  int128 num() const { return num_; }
  int128 den() const { return den_; }

  /// Parses "20", "-3", "0.95", "1.5e2", or "7/3" exactly.
  static Rational parse(std::string_view text) {
    auto fail = [&] { return UsageError("not a number: '" + std::string(text) + "'"); };
    if (text.empty()) throw fail();
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      Rational a = parse(text.substr(0, slash));
      Rational b = parse(text.substr(slash + 1));
      if (b.num_ == 0) throw fail();
      return a / b;
    }
    std::size_t i = 0;
    bool neg = false;
    if (text[i] == '+' || text[i] == '-') neg = text[i++] == '-';
    int128 num = 0, den = 1;
    bool digits = false, dot = false;
    for (; i < text.size(); ++i) {
      char c = text[i];
      if (c >= '0' && c <= '9') {
        num = detail::checked_add(detail::checked_mul(num, 10), c - '0');
        if (dot) den = detail::checked_mul(den, 10);
        digits = true;
      } else if (c == '.' && !dot) {
        dot = true;
      } else {
        break;
      }
    }
    if (!digits) throw fail();
    int exponent = 0;
    if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
      ++i;
      bool eneg = false;
      if (i < text.size() && (text[i] == '+' || text[i] == '-')) eneg = text[i++] == '-';
      if (i == text.size()) throw fail();
      for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
        exponent = exponent * 10 + (text[i] - '0');
        if (exponent > 30) throw fail();
      }
      if (eneg) exponent = -exponent;
    }
    if (i != text.size()) throw fail();
    for (; exponent > 0; --exponent) num = detail::checked_mul(num, 10);
    for (; exponent < 0; ++exponent) den = detail::checked_mul(den, 10);
    return Rational(neg ? -num : num, den);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    int128 g = detail::gcd128(a.den_, b.den_);
    int128 da = a.den_ / g;
    return Rational(detail::checked_add(detail::checked_mul(a.num_, b.den_ / g),
                                        detail::checked_mul(b.num_, da)),
                    detail::checked_mul(da, b.den_));
  }
  friend Rational operator-(const Rational& a) { return Rational(-a.num_, a.den_); }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    int128 g1 = detail::gcd128(a.num_, b.den_);
    int128 g2 = detail::gcd128(b.num_, a.den_);
    if (g1 == 0) g1 = 1;
    if (g2 == 0) g2 = 1;
    return Rational(detail::checked_mul(a.num_ / g1, b.num_ / g2),
                    detail::checked_mul(a.den_ / g2, b.den_ / g1));
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw Error("rational division by zero");
    return a * Rational(b.den_, b.num_);
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    int128 l, r;
    if (!__builtin_mul_overflow(a.num_, b.den_, &l) && !__builtin_mul_overflow(b.num_, a.den_, &r))
      return l <=> r;
    // Fall back to the exact sign of the difference.
    Rational d = a - b;
    return d.num_ <=> int128{0};
  }

  long double to_long_double() const {
    return static_cast<long double>(num_) / static_cast<long double>(den_);
  }
  double to_double() const { return static_cast<double>(to_long_double()); }

  /// Largest integer <= value.
  int128 floor() const {
    int128 q = num_ / den_;
    if (num_ % den_ != 0 && num_ < 0) --q;
    return q;
  }

  /// "n" or "n/d".
  std::string str() const { return den_ == 1 ? to_string(num_) : to_string(num_) + "/" + to_string(den_); }

 private:
  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    int128 g = detail::gcd128(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  int128 num_ = 0;
  int128 den_ = 1;
};

/// log2(v) in Q32 fixed point for v >= 1, by bitwise squaring of the
/// normalized mantissa. Integer-only, so identical on every platform.
inline std::uint64_t log2_q32(std::uint64_t v) {
  if (v == 0) throw Error("log2 of zero");
  int ip = 63 - std::countl_zero(v);
  std::uint64_t m = ip <= 31 ? v << (31 - ip) : v >> (ip - 31);  // Q31 in [1, 2)
  std::uint64_t frac = 0;
  for (int i = 0; i < 32; ++i) {
    m = (m * m) >> 31;
    frac <<= 1;
    if (m >= (std::uint64_t{1} << 32)) {
      m >>= 1;
      frac |= 1;
    }
  }
  return (std::uint64_t(ip) << 32) | frac;
}

inline double q32_to_double(int128 q) { return static_cast<double>(static_cast<long double>(q) / kQ32One); }

}  // namespace streamcode
