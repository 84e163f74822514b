#pragma once

// QuantizedPmf: a next-token distribution as integer frequencies summing to 2^F.
// It is the only currency between predictors and coders.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "streamcode/corpus.hpp"
#include "streamcode/errors.hpp"

namespace streamcode {

inline constexpr int kMinPrecision = 1;
inline constexpr int kMaxPrecision = 24;
inline constexpr int kDefaultPrecision = 14;

class QuantizedPmf {
 public:
  QuantizedPmf() = default;

  /// `freqs` must sum to 2^precision.
  QuantizedPmf(std::span<const std::uint32_t> freqs, int precision) : precision_(precision) {
    check_precision(precision);
    cum_.resize(freqs.size() + 1);
    cum_[0] = 0;
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
      total += freqs[i];
      if (total > total_()) throw Error("frequencies exceed 2^F");
      cum_[i + 1] = static_cast<std::uint32_t>(total);
    }
    if (total != total_()) throw Error("frequencies must sum to 2^F exactly");
  }

  static void check_precision(int f) {
    if (f < kMinPrecision || f > kMaxPrecision)
      throw UsageError("frequency precision F=" + std::to_string(f) + " outside [1, 24]");
  }

  std::size_t size() const { return cum_.empty() ? 0 : cum_.size() - 1; }
  int precision() const { return precision_; }
  std::uint32_t total() const { return total_(); }
  std::uint32_t freq(TokenId s) const { return cum_[s + 1] - cum_[s]; }
  std::uint32_t cum(TokenId s) const { return cum_[s]; }  // cum(V) = 2^F
  std::span<const std::uint32_t> cum_table() const { return cum_; }

  /// Symbol whose interval [cum(s), cum(s+1)) contains `slot`.
  TokenId symbol_for(std::uint32_t slot) const {
    auto it = std::upper_bound(cum_.begin(), cum_.end(), slot);
    return static_cast<TokenId>(std::distance(cum_.begin(), it) - 1);
  }

  std::vector<std::uint32_t> freqs() const {
    std::vector<std::uint32_t> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = freq(static_cast<TokenId>(i));
    return out;
  }

  std::vector<double> dequantize() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::ldexp(double(freq(TokenId(i))), -precision_);
    return out;
  }

  std::size_t support_size() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i) n += freq(TokenId(i)) > 0;
    return n;
  }

  friend bool operator==(const QuantizedPmf&, const QuantizedPmf&) = default;

 private:
  std::uint32_t total_() const { return std::uint32_t{1} << precision_; }

  std::vector<std::uint32_t> cum_;
  int precision_ = kDefaultPrecision;
};

/// Quantizes a probability vector to integer frequencies summing to 2^F.
///
/// Floors p*2^F, lifts every positive-probability symbol to at least 1, then
/// hands out the remaining units by largest remainder (ties to the lower id).
/// When lifting overshoots 2^F, units are taken back one at a time from the
/// symbol whose removal costs the fewest expected bits.
inline QuantizedPmf quantize(std::span<const double> probs, int precision) {
  QuantizedPmf::check_precision(precision);
  const std::size_t n = probs.size();
  const std::uint64_t total = std::uint64_t{1} << precision;
  if (n == 0) throw UsageError("cannot quantize an empty distribution");
  if (n > total) throw UsageError("vocabulary of " + std::to_string(n) + " exceeds 2^F=" + std::to_string(total));

  double sum = 0;
  for (double p : probs) {
    if (!(p >= 0) || !std::isfinite(p)) throw UsageError("probabilities must be finite and non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw UsageError("probabilities sum to " + std::to_string(sum) + ", not 1");

  const double scale = static_cast<double>(total) / sum;
  std::vector<std::uint32_t> f(n);
  std::vector<double> rem(n);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double t = probs[i] * scale;
    double fl = std::floor(t);
    f[i] = static_cast<std::uint32_t>(fl);
    if (probs[i] > 0 && f[i] == 0) f[i] = 1;
    rem[i] = t - f[i];
    assigned += f[i];
  }

  if (assigned < total) {
    std::uint64_t deficit = total - assigned;
    std::vector<std::uint32_t> order;
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      if (probs[i] > 0) order.push_back(static_cast<std::uint32_t>(i));
    auto by_remainder = [&](std::uint32_t a, std::uint32_t b) {
      return rem[a] != rem[b] ? rem[a] > rem[b] : a < b;
    };
    if (deficit > order.size()) throw Error("quantization deficit exceeds support");
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(deficit), order.end(), by_remainder);
    for (std::uint64_t k = 0; k < deficit; ++k) ++f[order[k]];
  } else if (assigned > total) {
    // Cost of taking one unit from symbol i: p_i * log2(f_i / (f_i - 1)).
    using Entry = std::pair<double, std::uint32_t>;
    auto cmp = [](const Entry& a, const Entry& b) { return a.first != b.first ? a.first > b.first : a.second > b.second; };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
    auto cost = [&](std::uint32_t i) { return probs[i] * std::log2(double(f[i]) / double(f[i] - 1)); };
    for (std::size_t i = 0; i < n; ++i)
      if (f[i] > 1) heap.emplace(cost(std::uint32_t(i)), std::uint32_t(i));
    for (std::uint64_t excess = assigned - total; excess > 0; --excess) {
      if (heap.empty()) throw Error("quantization cannot fit the support into 2^F");
      auto [c, i] = heap.top();
      heap.pop();
      --f[i];
      if (f[i] > 1) heap.emplace(cost(i), i);
    }
  }
  return QuantizedPmf(f, precision);
}

/// Quantizes a sparse distribution: listed (id, probability) entries plus a
/// tail mass spread uniformly over every unlisted id.
inline QuantizedPmf quantize_sparse(std::span<const std::pair<TokenId, double>> entries, double tail_mass,
                                    std::size_t vocab_size, int precision) {
  std::vector<double> dense(vocab_size, 0.0);
  std::vector<char> listed(vocab_size, 0);
  for (auto [id, p] : entries) {
    if (id >= vocab_size) throw UsageError("sparse entry id " + std::to_string(id) + " outside vocabulary");
    if (listed[id]) throw UsageError("duplicate sparse entry id " + std::to_string(id));
    listed[id] = 1;
    dense[id] = p;
  }
  std::size_t unlisted = vocab_size - entries.size();
  if (unlisted > 0) {
    double share = tail_mass / static_cast<double>(unlisted);
    for (std::size_t i = 0; i < vocab_size; ++i)
      if (!listed[i]) dense[i] = share;
  }
  double sum = std::accumulate(dense.begin(), dense.end(), 0.0);
  if (sum <= 0) throw UsageError("sparse distribution has no mass");
  for (double& p : dense) p /= sum;
  return quantize(dense, precision);
}

}  // namespace streamcode
