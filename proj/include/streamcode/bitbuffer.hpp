#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "streamcode/errors.hpp"

namespace streamcode {

// Growable bit sequence, one byte per bit. Multi-bit values are written MSB first.
class BitBuffer {
 public:
  BitBuffer() = default;

  void push(bool bit) { bits_.push_back(bit ? 1 : 0); }

  void push_bits(std::uint64_t value, int count) {
    for (int i = count - 1; i >= 0; --i) push((value >> i) & 1u);
  }

  void append(const BitBuffer& other) { bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end()); }

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void clear() { bits_.clear(); }

  friend bool operator==(const BitBuffer&, const BitBuffer&) = default;

  // Packs MSB-first into bytes; the last byte is zero-padded.
  std::vector<std::uint8_t> to_bytes() const {
    std::vector<std::uint8_t> out((bits_.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) out[i / 8] |= std::uint8_t(0x80u >> (i % 8));
    return out;
  }

  static BitBuffer from_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_count) {
    if (bit_count > bytes.size() * 8) throw CorruptStreamError("bit count exceeds payload", bytes.size() * 8);
    BitBuffer b;
    b.bits_.reserve(bit_count);
    for (std::size_t i = 0; i < bit_count; ++i) b.push((bytes[i / 8] >> (7 - i % 8)) & 1u);
    return b;
  }

  static BitBuffer from_string(std::string_view s) {
    BitBuffer b;
    for (char c : s) b.push(c == '1');
    return b;
  }

  std::string str() const {
    std::string s;
    s.reserve(bits_.size());
    for (auto v : bits_) s.push_back(v ? '1' : '0');
    return s;
  }

 private:
  std::vector<std::uint8_t> bits_;
};

// Sequential reader over a BitBuffer. `read_padded` returns zeros past the end;
// `read` throws on truncation.
class BitReader {
 public:
  explicit BitReader(const BitBuffer& bits) : bits_(&bits) {}

  std::uint64_t position() const { return pos_; }
  std::size_t size() const { return bits_->size(); }
  bool exhausted() const { return pos_ >= bits_->size(); }

  bool read_padded() {
    bool b = pos_ < bits_->size() && (*bits_)[pos_];
    ++pos_;
    return b;
  }

  bool read() {
    if (pos_ >= bits_->size()) throw CorruptStreamError("bitstream truncated", pos_);
    return (*bits_)[pos_++];
  }

  std::uint64_t read_bits(int count) {
    std::uint64_t v = 0;
    for (int i = 0; i < count; ++i) v = (v << 1) | (read() ? 1u : 0u);
    return v;
  }

 private:
  const BitBuffer* bits_;
  std::uint64_t pos_ = 0;
};

}  // namespace streamcode
