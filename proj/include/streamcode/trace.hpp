#pragma once

// Line-oriented probability traces exported from an external model.
//
//   #trace <TAB> V=<vocab> <TAB> tokenizer=<name> <TAB> model=<name>
//   n <TAB> token_id <TAB> k <TAB> id:prob (k fields) <TAB> tail_mass [<TAB> surface_hex]
//
// Probabilities are decimals with at least 9 significant digits. The optional
// last field carries the token's surface bytes in hex; a replayed stream needs
// it for character counts and for byte-level coders.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "streamcode/corpus.hpp"
#include "streamcode/errors.hpp"

namespace streamcode {

struct TraceRecord {
  std::size_t position = 0;
  TokenId token = 0;
  std::vector<std::pair<TokenId, double>> entries;
  double tail_mass = 0;
  std::optional<std::string> surface;
};

struct TraceHeader {
  std::size_t vocab_size = 0;
  std::string tokenizer;
  std::string model;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceRecord> records;
};

inline std::string hex_encode(std::string_view bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 15]);
  }
  return out;
}

inline std::optional<std::string> hex_decode(std::string_view hex) {
  if (hex.size() % 2) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]), lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<char>(hi * 16 + lo));
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace detail

/// Parses a trace; `line` positions in errors are 1-based.
inline Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_tabs(line);
    if (!have_header) {
      if (fields[0] != "#trace") throw ParseError("trace must start with a '#trace' header line", line_no);
      for (std::size_t i = 1; i < fields.size(); ++i) {
        auto eq = fields[i].find('=');
        if (eq == std::string_view::npos) throw ParseError("malformed header field", line_no);
        auto key = fields[i].substr(0, eq), value = fields[i].substr(eq + 1);
        if (key == "V") {
          if (!detail::parse_number(value, trace.header.vocab_size) || trace.header.vocab_size == 0)
            throw ParseError("bad vocabulary size", line_no);
        } else if (key == "tokenizer") {
          trace.header.tokenizer = std::string(value);
        } else if (key == "model") {
          trace.header.model = std::string(value);
        }
      }
      if (trace.header.vocab_size == 0) throw ParseError("header lacks V=", line_no);
      have_header = true;
      continue;
    }
    if (line[0] == '#') continue;

    TraceRecord rec;
    std::size_t k = 0;
    if (fields.size() < 4 || !detail::parse_number(fields[0], rec.position) ||
        !detail::parse_number(fields[1], rec.token) || !detail::parse_number(fields[2], k))
      throw ParseError("malformed trace record", line_no);
    if (fields.size() != 4 + k && fields.size() != 5 + k) throw ParseError("entry count does not match k", line_no);
    if (rec.position != trace.records.size()) throw ParseError("positions must be consecutive from 0", line_no);
    const auto V = trace.header.vocab_size;
    if (rec.token >= V) throw ParseError("token id outside vocabulary", line_no);
    double sum = 0;
    bool realized_listed = false;
    rec.entries.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      auto f = fields[3 + i];
      auto colon = f.find(':');
      TokenId id;
      double p;
      if (colon == std::string_view::npos || !detail::parse_number(f.substr(0, colon), id) ||
          !detail::parse_number(f.substr(colon + 1), p))
        throw ParseError("malformed id:prob entry", line_no);
      if (id >= V) throw ParseError("entry id outside vocabulary", line_no);
      if (!(p > 0 && p <= 1)) throw ParseError("entry probability outside (0, 1]", line_no);
      realized_listed |= id == rec.token;
      sum += p;
      rec.entries.emplace_back(id, p);
    }
    if (!detail::parse_number(fields[3 + k], rec.tail_mass) || rec.tail_mass < 0 || rec.tail_mass > 1)
      throw ParseError("malformed tail mass", line_no);
    sum += rec.tail_mass;
    if (std::abs(sum - 1.0) > 1e-9 * double(k + 1)) throw ParseError("listed + tail mass does not sum to 1", line_no);
    if (!realized_listed) throw ParseError("realized token missing from entries", line_no);
    if (k == V && rec.tail_mass > 1e-9 * double(k + 1)) throw ParseError("tail mass with no unlisted ids", line_no);
    if (fields.size() == 5 + k) {
      auto s = hex_decode(fields[4 + k]);
      if (!s || s->empty()) throw ParseError("malformed surface hex", line_no);
      rec.surface = std::move(*s);
    }
    trace.records.push_back(std::move(rec));
  }
  if (!have_header) throw ParseError("empty trace", 0);
  return trace;
}

inline Trace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open trace '" + path + "'");
  return read_trace(in);
}

inline std::string format_probability(double p) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", p);
  return buf;
}

inline void write_trace(std::ostream& out, const Trace& trace) {
  out << "#trace\tV=" << trace.header.vocab_size << "\ttokenizer=" << trace.header.tokenizer
      << "\tmodel=" << trace.header.model << '\n';
  for (const auto& r : trace.records) {
    out << r.position << '\t' << r.token << '\t' << r.entries.size();
    for (auto [id, p] : r.entries) out << '\t' << id << ':' << format_probability(p);
    out << '\t' << format_probability(r.tail_mass);
    if (r.surface) out << '\t' << hex_encode(*r.surface);
    out << '\n';
  }
}

/// Rebuilds the token stream a trace was exported from. Requires surfaces.
inline TokenStream stream_from_trace(const Trace& trace, const Rational& char_rate,
                                     CharConvention convention = CharConvention::Auto) {
  std::vector<TokenId> ids;
  std::vector<std::string> surfaces;
  Vocabulary vocab(trace.header.vocab_size);
  std::string all;
  for (const auto& r : trace.records) {
    if (!r.surface) throw ParseError("trace record lacks token surface; cannot rebuild the stream", r.position);
    ids.push_back(r.token);
    surfaces.push_back(*r.surface);
    all += *r.surface;
  }
  if (ids.empty()) throw UsageError("trace has no records");
  if (convention == CharConvention::Auto)
    convention = utf8::first_invalid(all) ? CharConvention::Bytes : CharConvention::Utf8Scalars;
  std::string name = trace.header.tokenizer.empty() ? "trace" : trace.header.tokenizer;
  return TokenStream(std::move(ids), std::move(surfaces), std::move(vocab), char_rate, convention, name);
}

}  // namespace streamcode
