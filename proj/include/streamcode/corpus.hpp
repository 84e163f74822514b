#pragma once

// Text ingestion: segmentation into tokens, per-token character counts, and the
// deterministic arrival clock t_arr(i) = (sum_{j<=i} B_j) / lambda.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "streamcode/errors.hpp"
#include "streamcode/exact.hpp"

namespace streamcode {

using TokenId = std::uint32_t;

enum class TokenizerKind { Char, Word };

// How characters are counted. Auto resolves to Utf8Scalars when the input is
// valid UTF-8 and to Bytes otherwise.
enum class CharConvention { Auto, Utf8Scalars, Bytes };

inline std::string_view to_string(CharConvention c) {
  switch (c) {
    case CharConvention::Utf8Scalars: return "utf8-scalars";
    case CharConvention::Bytes: return "bytes";
    default: return "auto";
  }
}

inline CharConvention parse_char_convention(std::string_view s) {
  if (s == "auto") return CharConvention::Auto;
  if (s == "utf8" || s == "utf8-scalars") return CharConvention::Utf8Scalars;
  if (s == "bytes") return CharConvention::Bytes;
  throw UsageError("unknown character convention '" + std::string(s) + "'");
}

struct TokenizerSpec {
  TokenizerKind kind = TokenizerKind::Word;
  CharConvention convention = CharConvention::Auto;

  static TokenizerSpec parse(std::string_view name) {
    if (name == "char") return {TokenizerKind::Char};
    if (name == "word") return {TokenizerKind::Word};
    throw UsageError("unknown tokenizer '" + std::string(name) + "' (expected char or word)");
  }
  std::string name() const { return kind == TokenizerKind::Char ? "char" : "word"; }
};

namespace utf8 {

// Length of the scalar starting at s[i], or 0 if the sequence is malformed.
inline std::size_t scalar_length(std::string_view s, std::size_t i) {
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char b0 = byte(i);
  std::size_t len;
  std::uint32_t cp;
  if (b0 < 0x80) return 1;
  if ((b0 & 0xE0) == 0xC0) len = 2, cp = b0 & 0x1F;
  else if ((b0 & 0xF0) == 0xE0) len = 3, cp = b0 & 0x0F;
  else if ((b0 & 0xF8) == 0xF0) len = 4, cp = b0 & 0x07;
  else return 0;
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    if ((byte(i + k) & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (byte(i + k) & 0x3F);
  }
  static constexpr std::uint32_t min_cp[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < min_cp[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  return len;
}

// Byte offset of the first malformed sequence, if any.
inline std::optional<std::size_t> first_invalid(std::string_view s) {
  for (std::size_t i = 0; i < s.size();) {
    std::size_t n = scalar_length(s, i);
    if (n == 0) return i;
    i += n;
  }
  return std::nullopt;
}

inline std::size_t count_scalars(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++n) {
    std::size_t len = scalar_length(s, i);
    i += len == 0 ? 1 : len;
  }
  return n;
}

}  // namespace utf8

inline std::size_t count_chars(std::string_view s, CharConvention c) {
  return c == CharConvention::Bytes ? s.size() : utf8::count_scalars(s);
}

// Bidirectional id <-> surface map. Ids may exist without a known surface
// (vocabularies declared by traces).
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::size_t declared_size) : declared_size_(declared_size) {}

  TokenId intern(std::string_view surface) {
    if (auto it = index_.find(std::string(surface)); it != index_.end()) return it->second;
    TokenId id = static_cast<TokenId>(surfaces_.size());
    surfaces_.emplace_back(surface);
    index_.emplace(std::string(surface), id);
    return id;
  }

  void assign(TokenId id, std::string_view surface) {
    if (id >= surfaces_.size()) surfaces_.resize(id + 1);
    surfaces_[id] = std::string(surface);
    index_.emplace(std::string(surface), id);
  }

  std::optional<TokenId> find(std::string_view surface) const {
    if (auto it = index_.find(std::string(surface)); it != index_.end()) return it->second;
    return std::nullopt;
  }

  const std::string& surface(TokenId id) const {
    if (id >= surfaces_.size()) throw Error("token id " + std::to_string(id) + " has no known surface");
    return surfaces_[id];
  }

  std::size_t size() const { return std::max(declared_size_, surfaces_.size()); }
  std::size_t known() const { return surfaces_.size(); }

 private:
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t declared_size_ = 0;
};

struct TokenEvent {
  TokenId token = 0;
  std::uint32_t char_count = 0;   // B_j >= 1
  std::int64_t chars_through = 0;  // sum_{j<=i} B_j; arrival = chars_through / lambda
};

/// An ordered token stream with its source clock. Immutable once built.
class TokenStream {
 public:
  TokenStream() = default;

  /// Builds a stream from token ids and their surfaces. Character counts come
  /// from the surfaces under `convention` (which must already be resolved).
  TokenStream(std::vector<TokenId> ids, std::vector<std::string> surfaces, Vocabulary vocab,
              Rational char_rate, CharConvention convention, std::string tokenizer)
      : vocab_(std::move(vocab)),
        surfaces_(std::move(surfaces)),
        char_rate_(char_rate),
        convention_(convention),
        tokenizer_(std::move(tokenizer)) {
    if (char_rate_ <= Rational(0)) throw UsageError("character rate must be positive");
    if (convention_ == CharConvention::Auto) throw Error("character convention must be resolved");
    if (ids.size() != surfaces_.size()) throw Error("token ids and surfaces differ in length");
    events_.reserve(ids.size());
    std::int64_t total = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto b = count_chars(surfaces_[i], convention_);
      if (b == 0) throw ParseError("token has no characters", i);
      if (ids[i] >= vocab_.size()) throw ParseError("token id outside vocabulary", i);
      total += static_cast<std::int64_t>(b);
      events_.push_back({ids[i], static_cast<std::uint32_t>(b), total});
    }
  }

  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const TokenEvent& operator[](std::size_t i) const { return events_[i]; }
  const std::vector<TokenEvent>& events() const { return events_; }
  const std::string& surface(std::size_t i) const { return surfaces_[i]; }
  const Vocabulary& vocab() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  const Rational& char_rate() const { return char_rate_; }
  CharConvention convention() const { return convention_; }
  const std::string& tokenizer() const { return tokenizer_; }

  std::int64_t total_chars() const { return events_.empty() ? 0 : events_.back().chars_through; }

  Rational mean_chars_per_token() const {
    if (events_.empty()) throw Error("empty token stream");
    return Rational(total_chars(), static_cast<std::int64_t>(events_.size()));
  }

  /// t_arr(i) in seconds, exact.
  Rational arrival_time(std::size_t i) const { return Rational(events_[i].chars_through) / char_rate_; }

  std::vector<TokenId> ids() const {
    std::vector<TokenId> out;
    out.reserve(events_.size());
    for (const auto& e : events_) out.push_back(e.token);
    return out;
  }

  /// Concatenation of all token surfaces (detokenization).
  std::string text() const {
    std::string out;
    for (const auto& s : surfaces_) out += s;
    return out;
  }

  /// The first n tokens (n clamped to size()).
  TokenStream prefix(std::size_t n) const {
    n = std::min(n, events_.size());
    TokenStream out = *this;
    out.events_.resize(n);
    out.surfaces_.resize(n);
    return out;
  }

 private:
  std::vector<TokenEvent> events_;
  Vocabulary vocab_;
  std::vector<std::string> surfaces_;
  Rational char_rate_{20};
  CharConvention convention_ = CharConvention::Bytes;
  std::string tokenizer_;
};

namespace detail {

inline bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

inline std::vector<std::string_view> split_chars(std::string_view text, CharConvention c) {
  std::vector<std::string_view> out;
  for (std::size_t i = 0; i < text.size();) {
    std::size_t n = c == CharConvention::Bytes ? 1 : utf8::scalar_length(text, i);
    out.push_back(text.substr(i, n));
    i += n;
  }
  return out;
}

// Maximal runs of non-space characters, each with its leading whitespace.
// Trailing whitespace forms a final whitespace-only token.
inline std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0, i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    out.push_back(text.substr(start, i - start));
    start = i;
  }
  return out;
}

}  // namespace detail

/// Segments `text` into a TokenStream with arrival clock at `char_rate`
/// characters per second.
inline TokenStream tokenize(std::string_view text, const TokenizerSpec& spec, const Rational& char_rate) {
  if (text.empty()) throw UsageError("input text is empty");
  if (char_rate <= Rational(0)) throw UsageError("character rate must be positive");

  CharConvention conv = spec.convention;
  auto bad = utf8::first_invalid(text);
  if (conv == CharConvention::Utf8Scalars && bad) throw ParseError("invalid UTF-8 sequence", *bad);
  if (conv == CharConvention::Auto) conv = bad ? CharConvention::Bytes : CharConvention::Utf8Scalars;

  Vocabulary vocab;
  std::vector<std::string_view> pieces;
  if (spec.kind == TokenizerKind::Char) {
    // Ids 0..255 are single bytes; multi-byte scalars follow in first-seen order.
    for (int b = 0; b < 256; ++b) vocab.intern(std::string(1, static_cast<char>(b)));
    pieces = detail::split_chars(text, conv);
  } else {
    pieces = detail::split_words(text);
  }

  std::vector<TokenId> ids;
  std::vector<std::string> surfaces;
  ids.reserve(pieces.size());
  surfaces.reserve(pieces.size());
  for (auto p : pieces) {
    ids.push_back(vocab.intern(p));
    surfaces.emplace_back(p);
  }
  return TokenStream(std::move(ids), std::move(surfaces), std::move(vocab), char_rate, conv, spec.name());
}

/// Token arrival rate lambda / E[B] in tokens per second.
inline Rational token_rate(const Rational& char_rate, const Rational& mean_chars_per_token) {
  if (mean_chars_per_token <= Rational(0)) throw UsageError("mean characters per token must be positive");
  return char_rate / mean_chars_per_token;
}

inline Rational token_rate(const TokenStream& stream) {
  if (stream.empty()) throw Error("token_rate of an empty stream");
  return token_rate(stream.char_rate(), stream.mean_chars_per_token());
}

}  // namespace streamcode
