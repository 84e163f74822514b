#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace streamcode {

// Base for every diagnostic raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or configuration (CLI maps these to exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Input text or file that cannot be parsed; carries the offending position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at position " + std::to_string(position) + ")"), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// The realized token has zero quantized mass: its code length is infinite.
class ZeroFrequencyError : public Error {
 public:
  explicit ZeroFrequencyError(std::size_t token_index)
      : Error("realized token at position " + std::to_string(token_index) +
              " has zero quantized frequency (infinite code length)"),
        token_index_(token_index) {}
  std::size_t token_index() const noexcept { return token_index_; }

 private:
  std::size_t token_index_;
};

// A bitstream that does not decode under the expected model.
class CorruptStreamError : public Error {
 public:
  CorruptStreamError(const std::string& what, std::uint64_t bit_position)
      : Error(what + " (at bit " + std::to_string(bit_position) + ")"), bit_position_(bit_position) {}
  std::uint64_t bit_position() const noexcept { return bit_position_; }

 private:
  std::uint64_t bit_position_;
};

}  // namespace streamcode
