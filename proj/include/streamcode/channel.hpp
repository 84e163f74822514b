#pragma once

// Constant-rate FIFO bit server and per-token delay laws.
//
// All times live on an integer tick grid chosen per (lambda, C) so that token
// arrivals and the service time of one Q32 bit unit are whole numbers of ticks.
// Every delay computed here is exact; seconds appear only at the boundary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "streamcode/coder_core.hpp"
#include "streamcode/errors.hpp"
#include "streamcode/exact.hpp"

namespace streamcode {

struct ChannelSpec {
  Rational rate_bps;
  explicit ChannelSpec(Rational c) : rate_bps(c) {
    if (c <= Rational(0)) throw UsageError("channel rate must be positive");
  }
};

class TimeBase {
 public:
  /// `time_denominator` must be a multiple of the denominator of every time
  /// that will be converted with ticks() (for arrivals: the numerator of lambda).
  static TimeBase make(const Rational& rate_bps, int128 time_denominator) {
    if (rate_bps <= Rational(0)) throw UsageError("channel rate must be positive");
    if (time_denominator <= 0) throw Error("time denominator must be positive");
    // One Q32 unit takes C.den / (C.num * 2^32) seconds.
    int128 unit_num = rate_bps.den();
    int128 unit_den = detail::checked_mul(rate_bps.num(), int128{kQ32One});
    int128 g = detail::gcd128(unit_num, unit_den);
    unit_num /= g;
    unit_den /= g;
    TimeBase tb;
    tb.rate_ = rate_bps;
    tb.tps_ = detail::lcm128(time_denominator, unit_den);
    tb.q32_ticks_ = detail::checked_mul(tb.tps_ / unit_den, unit_num);
    return tb;
  }

  int128 ticks_per_second() const { return tps_; }
  int128 q32_ticks() const { return q32_ticks_; }
  const Rational& rate() const { return rate_; }

  int128 ticks(const Rational& seconds) const {
    if (tps_ % seconds.den() != 0) throw Error("time " + seconds.str() + " is not on the tick grid");
    return detail::checked_mul(seconds.num(), tps_ / seconds.den());
  }
  int128 service(std::int64_t bits_q32) const { return detail::checked_mul(bits_q32, q32_ticks_); }
  long double seconds(int128 ticks) const {
    return static_cast<long double>(ticks) / static_cast<long double>(tps_);
  }
  Rational exact_seconds(int128 ticks) const { return Rational(ticks, tps_); }

 private:
  Rational rate_{1};
  int128 tps_ = 1;
  int128 q32_ticks_ = 1;
};

struct QueueUnit {
  int128 enqueue = 0;         // ticks
  std::int64_t bits_q32 = 0;  // service demand
};

/// Service history of a sequence of units.
struct ChannelTrace {
  TimeBase base;
  std::vector<int128> start, end;          // per unit
  std::vector<std::int64_t> bits_before;   // Q32 bits served before each unit
  std::int64_t total_bits_q32 = 0;
  int128 busy = 0;

  std::size_t size() const { return start.size(); }

  /// Exit time of global bit j (1-based), for units holding whole bits.
  int128 exit_of_bit(std::uint64_t j) const {
    if (j == 0 || std::int64_t(j) > (total_bits_q32 >> 32)) throw Error("channel bit index out of range");
    const std::int64_t pos = std::int64_t(j) << 32;  // end of bit j in Q32
    auto it = std::lower_bound(bits_before.begin(), bits_before.end(), pos);
    std::size_t u = static_cast<std::size_t>(it - bits_before.begin()) - 1;
    return start[u] + base.service(pos - bits_before[u]);
  }
};

/// FIFO service: unit k starts at max(end of k-1, its enqueue) and ends after
/// its bits at rate C. Zero-bit units pass through without occupying the server.
inline ChannelTrace serve(std::span<const QueueUnit> units, const TimeBase& base) {
  ChannelTrace tr{base, {}, {}, {}, 0, 0};
  tr.start.reserve(units.size());
  tr.end.reserve(units.size());
  tr.bits_before.reserve(units.size());
  int128 free_at = 0;
  int128 last_enqueue = 0;
  for (const auto& u : units) {
    if (u.enqueue < last_enqueue) throw Error("units must be enqueued in time order");
    if (u.bits_q32 < 0) throw Error("negative bit count");
    last_enqueue = u.enqueue;
    int128 s = std::max(free_at, u.enqueue);
    int128 d = base.service(u.bits_q32);
    tr.start.push_back(s);
    tr.end.push_back(s + d);
    tr.bits_before.push_back(tr.total_bits_q32);
    tr.total_bits_q32 += u.bits_q32;
    tr.busy += d;
    free_at = s + d;
  }
  return tr;
}

/// serve() on CodedUnits with rational enqueue times.
inline ChannelTrace serve(const std::vector<CodedUnit>& units, const ChannelSpec& channel) {
  int128 den = 1;
  for (const auto& u : units) den = detail::lcm128(den, u.enqueue_time.den());
  TimeBase base = TimeBase::make(channel.rate_bps, den);
  std::vector<QueueUnit> q;
  q.reserve(units.size());
  for (const auto& u : units) q.push_back({base.ticks(u.enqueue_time), u.bits_q32});
  return serve(q, base);
}

/// Per-token arrival and decode instants on one tick grid.
class DelayTable {
 public:
  DelayTable() = default;
  DelayTable(TimeBase base, std::vector<int128> arrival, std::vector<int128> decode)
      : base_(base), arrival_(std::move(arrival)), decode_(std::move(decode)) {
    if (arrival_.size() != decode_.size()) throw Error("arrival and decode tables differ in length");
    for (std::size_t i = 0; i < arrival_.size(); ++i)
      if (decode_[i] < arrival_[i]) throw Error("token decoded before it arrived");
  }

  std::size_t size() const { return arrival_.size(); }
  bool empty() const { return arrival_.empty(); }
  const TimeBase& base() const { return base_; }
  int128 arrival_ticks(std::size_t i) const { return arrival_[i]; }
  int128 decode_ticks(std::size_t i) const { return decode_[i]; }
  int128 delay_ticks(std::size_t i) const { return decode_[i] - arrival_[i]; }

  long double arrival(std::size_t i) const { return base_.seconds(arrival_[i]); }
  long double decode_time(std::size_t i) const { return base_.seconds(decode_[i]); }
  long double delay(std::size_t i) const { return base_.seconds(delay_ticks(i)); }
  Rational exact_delay(std::size_t i) const { return base_.exact_seconds(delay_ticks(i)); }

  /// Mean over tokens [first, last).
  long double mean(std::size_t first, std::size_t last) const {
    if (first >= last || last > size()) throw Error("empty delay range");
    int128 sum = 0;
    for (std::size_t i = first; i < last; ++i) sum = detail::checked_add(sum, delay_ticks(i));
    return static_cast<long double>(sum) / static_cast<long double>(last - first) /
           static_cast<long double>(base_.ticks_per_second());
  }
  long double mean() const { return mean(0, size()); }

  long double max() const {
    if (empty()) throw Error("max of no delays");
    int128 m = 0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, delay_ticks(i));
    return base_.seconds(m);
  }

  std::vector<int128> delays_ticks() const {
    std::vector<int128> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = delay_ticks(i);
    return out;
  }

 private:
  TimeBase base_;
  std::vector<int128> arrival_, decode_;
};

/// Nearest-rank percentile: the ceil(p/100 * N)-th smallest value (rank >= 1).
/// `p` is read to six decimals.
template <class T>
T percentile_nearest_rank(std::vector<T> values, double p) {
  if (values.empty()) throw Error("percentile of an empty set");
  if (!(p >= 0 && p <= 100)) throw UsageError("percentile must lie in [0, 100]");
  Rational frac(static_cast<std::int64_t>(std::llround(p * 1e6)), std::int64_t{100'000'000});
  Rational pos = frac * Rational(static_cast<std::int64_t>(values.size()));
  int128 rank = pos.floor();
  if (Rational(rank, 1) != pos) ++rank;
  if (rank < 1) rank = 1;
  auto k = static_cast<std::size_t>(rank - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

inline long double percentile_delay(const DelayTable& t, double p) {
  return t.base().seconds(percentile_nearest_rank(t.delays_ticks(), p));
}

/// Scalar coders: D(n) = max(0, t_exit(n-1) - t_arr(n)) + b(x_n)/C.
inline DelayTable lindley_delays(std::span<const int128> arrivals, std::span<const std::int64_t> bits_q32,
                                 const TimeBase& base) {
  if (arrivals.size() != bits_q32.size()) throw Error("one bit cost per token required");
  std::vector<int128> arr(arrivals.begin(), arrivals.end()), dec(arrivals.size());
  int128 exit_prev = 0;
  for (std::size_t n = 0; n < arr.size(); ++n) {
    int128 wait = std::max<int128>(0, exit_prev - arr[n]);
    int128 d = wait + base.service(bits_q32[n]);
    dec[n] = arr[n] + d;
    exit_prev = dec[n];
  }
  return DelayTable(base, std::move(arr), std::move(dec));
}

/// Arithmetic coding: token n is decodable once channel bit beta_n has exited,
///   D(n) = max(t_serve(beta_n), t_arr(n)) - t_arr(n).
/// Betas beyond the stream use its last bit.
inline DelayTable ac_delays(const ChannelTrace& trace, std::span<const std::uint64_t> betas,
                            std::span<const int128> arrivals) {
  if (betas.size() != arrivals.size()) throw Error("one beta per token required");
  const std::uint64_t total = static_cast<std::uint64_t>(trace.total_bits_q32 >> 32);
  std::vector<int128> arr(arrivals.begin(), arrivals.end()), dec(arrivals.size());
  for (std::size_t n = 0; n < arr.size(); ++n) {
    std::uint64_t b = std::min(betas[n], total);
    int128 t = b == 0 ? arr[n] : trace.exit_of_bit(b);
    dec[n] = std::max(t, arr[n]);
  }
  return DelayTable(trace.base, std::move(arr), std::move(dec));
}

/// Block coders: every token of a block decodes when the block's last bit exits.
/// `unit_of_token[n]` is the unit (block) carrying token n.
inline DelayTable block_delays(const ChannelTrace& trace, std::span<const std::size_t> unit_of_token,
                               std::span<const int128> arrivals) {
  if (unit_of_token.size() != arrivals.size()) throw Error("one unit index per token required");
  std::vector<int128> arr(arrivals.begin(), arrivals.end()), dec(arrivals.size());
  for (std::size_t n = 0; n < arr.size(); ++n) {
    dec[n] = trace.end.at(unit_of_token[n]);
    if (dec[n] < arr[n]) throw Error("block served before its token arrived");
  }
  return DelayTable(trace.base, std::move(arr), std::move(dec));
}

inline DelayTable rans_delays(const ChannelTrace& trace, std::span<const std::size_t> block_of_token,
                              std::span<const int128> arrivals) {
  return block_delays(trace, block_of_token, arrivals);
}

}  // namespace streamcode
