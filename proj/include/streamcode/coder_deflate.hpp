#pragma once

// Per-token DEFLATE with a sync flush after every token (zlib, raw stream).
// Each token is charged every byte emitted up to and including its flush.

#include <zlib.h>

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "streamcode/errors.hpp"

namespace streamcode {

struct FlushLedgerEntry {
  std::size_t token = 0;
  std::size_t bytes = 0;
  std::uint64_t bits() const { return 8 * std::uint64_t(bytes); }
};

class DeflateFlushEncoder {
 public:
  explicit DeflateFlushEncoder(int level = Z_DEFAULT_COMPRESSION) : level_(level) {
    if (deflateInit2(&z_, level, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
      throw Error("deflateInit2 failed");
  }
  DeflateFlushEncoder(const DeflateFlushEncoder&) = delete;
  DeflateFlushEncoder& operator=(const DeflateFlushEncoder&) = delete;
  ~DeflateFlushEncoder() { deflateEnd(&z_); }

  int level() const { return level_; }

  /// Compresses one token and sync-flushes; returns the bytes emitted.
  std::vector<std::uint8_t> push(std::string_view token) {
    std::vector<std::uint8_t> out;
    z_.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(token.data()));
    z_.avail_in = static_cast<uInt>(token.size());
    unsigned char buf[4096];
    do {
      z_.next_out = buf;
      z_.avail_out = sizeof buf;
      int rc = deflate(&z_, Z_SYNC_FLUSH);
      if (rc != Z_OK && rc != Z_BUF_ERROR) throw Error("deflate failed: " + std::to_string(rc));
      out.insert(out.end(), buf, buf + (sizeof buf - z_.avail_out));
    } while (z_.avail_out == 0 || z_.avail_in > 0);
    return out;
  }

 private:
  z_stream z_{};
  int level_;
};

class InflateStream {
 public:
  InflateStream() {
    if (inflateInit2(&z_, -15) != Z_OK) throw Error("inflateInit2 failed");
  }
  InflateStream(const InflateStream&) = delete;
  InflateStream& operator=(const InflateStream&) = delete;
  ~InflateStream() { inflateEnd(&z_); }

  /// Feeds compressed bytes, returns everything decodable so far.
  std::string push(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    z_.next_in = const_cast<Bytef*>(bytes.data());
    z_.avail_in = static_cast<uInt>(bytes.size());
    unsigned char buf[4096];
    do {
      z_.next_out = buf;
      z_.avail_out = sizeof buf;
      int rc = inflate(&z_, Z_SYNC_FLUSH);
      if (rc == Z_DATA_ERROR || rc == Z_NEED_DICT || rc == Z_MEM_ERROR)
        throw CorruptStreamError("inflate failed", 8 * std::uint64_t(z_.total_in));
      out.append(reinterpret_cast<char*>(buf), sizeof buf - z_.avail_out);
      if (rc == Z_STREAM_END || rc == Z_BUF_ERROR) break;
    } while (z_.avail_out == 0 || z_.avail_in > 0);
    return out;
  }

 private:
  z_stream z_{};
};

/// Compresses tokens with a flush per token. Every flush is checked by an
/// incremental inflater: the decoded prefix must equal the source prefix.
inline std::vector<FlushLedgerEntry> deflate_ledger(const std::vector<std::string>& tokens,
                                                    int level = Z_DEFAULT_COMPRESSION,
                                                    std::vector<std::uint8_t>* payload = nullptr) {
  DeflateFlushEncoder enc(level);
  InflateStream dec;
  std::vector<FlushLedgerEntry> ledger;
  ledger.reserve(tokens.size());
  std::string decoded;
  std::size_t source = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto bytes = enc.push(tokens[i]);
    decoded += dec.push(bytes);
    source += tokens[i].size();
    if (decoded.size() != source || decoded.compare(source - tokens[i].size(), tokens[i].size(), tokens[i]) != 0)
      throw Error("deflate flush at token " + std::to_string(i) + " is not prefix-decodable");
    ledger.push_back({i, bytes.size()});
    if (payload) payload->insert(payload->end(), bytes.begin(), bytes.end());
  }
  return ledger;
}

/// Inflates a whole payload.
inline std::string inflate_all(const std::vector<std::uint8_t>& payload) {
  InflateStream dec;
  return dec.push(payload);
}

}  // namespace streamcode
