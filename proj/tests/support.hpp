#pragma once

// Shared helpers for the test suites.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "streamcode/streamcode.hpp"

namespace testing_support {

using namespace streamcode;

/// Seed for randomized streams: STREAMCODE_SEED when set, else a fixed value.
inline std::uint64_t seed(std::uint64_t salt = 0) {
  std::uint64_t base = 20240601;
  if (const char* s = std::getenv("STREAMCODE_SEED")) base = std::strtoull(s, nullptr, 10);
  return base ^ (salt * 0x9e3779b97f4a7c15ull);
}

inline std::string data_path(const std::string& rel) { return std::string(STREAMCODE_DATA_DIR) + "/" + rel; }
inline std::string fixture_path() { return data_path("fixture/fixture_trace.tsv"); }

inline double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

/// Random probability vector. Skewed vectors follow a steep power law with a
/// random permutation, so a few ids dominate and many sit near the floor.
inline std::vector<double> random_probs(std::mt19937_64& rng, std::size_t v, bool skewed) {
  std::vector<double> p(v);
  double sum = 0;
  for (std::size_t i = 0; i < v; ++i) {
    double u = uniform01(rng) + 1e-12;
    p[i] = skewed ? std::pow(u, 12.0) : u;
    sum += p[i];
  }
  for (auto& x : p) x /= sum;
  return p;
}

inline QuantizedPmf random_pmf(std::mt19937_64& rng, std::size_t v, int f, bool skewed) {
  auto p = random_probs(rng, v, skewed);
  return quantize(p, f);
}

/// A token drawn from the PMF itself.
inline TokenId draw(std::mt19937_64& rng, const QuantizedPmf& pmf) {
  auto slot = static_cast<std::uint32_t>(rng() % pmf.total());
  return pmf.symbol_for(slot);
}

/// The realized-token stream of the bundled fixture, with its trace.
struct Fixture {
  std::shared_ptr<Trace> trace;
  TokenStream stream;
  PredictorSpec predictor;
};

inline const Fixture& fixture() {
  static const Fixture fx = [] {
    Fixture f;
    f.trace = std::make_shared<Trace>(read_trace_file(fixture_path()));
    f.stream = stream_from_trace(*f.trace, Rational(20), CharConvention::Utf8Scalars);
    f.predictor.kind = PredictorKind::TraceReplay;
    f.predictor.vocab_size = f.trace->header.vocab_size;
    f.predictor.trace = f.trace;
    return f;
  }();
  return fx;
}

inline TextRun code_fixture(const std::vector<std::string>& coder_ids, std::size_t tokens = 10'000) {
  const Fixture& f = fixture();
  std::vector<CoderSpec> coders;
  for (const auto& id : coder_ids) coders.push_back(CoderSpec::parse(id));
  TextInput in{"fixture", f.stream.prefix(tokens), f.trace};
  return code_text(in, f.predictor, coders);
}

}  // namespace testing_support
