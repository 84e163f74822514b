// Generates the bundled synthetic probability trace.
//
// Each position gets a calibrated sparse distribution: a geometric profile over
// eight listed ids plus a uniform tail, and the realized token is drawn from
// that same distribution. Token surfaces are fixed pseudo-words of 1..7
// characters (mean near 4). Only raw mt19937_64 output is used, so the file is
// identical on every platform.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "streamcode/trace.hpp"

namespace {

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : gen_(seed) {}
  double next() { return double(gen_() >> 11) * 0x1.0p-53; }
  std::uint64_t bits() { return gen_(); }
  std::uint32_t below(std::uint32_t n) { return std::uint32_t(next() * n); }

 private:
  std::mt19937_64 gen_;
};

std::vector<std::string> make_surfaces(std::size_t vocab, Uniform& rng) {
  static constexpr char letters[] = "etaoinshrdlucmfwypvbgkjqxz";
  std::vector<std::string> out(vocab);
  for (auto& s : out) {
    int len = 1 + int(rng.bits() % 7);
    s = " ";
    for (int i = 1; i < len; ++i) s += letters[std::min<std::uint32_t>(25, rng.below(26) * rng.below(26) / 20)];
    if (len == 1) s = std::string(1, "etaoinshrdlu.,"[rng.below(14)]);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Write the synthetic probability trace used by the tests"};
  std::string out_path = "fixture_trace.tsv";
  std::size_t positions = 10'000, vocab = 4096;
  std::uint64_t seed = 20240601;
  int listed = 8;
  app.add_option("--out", out_path, "output path");
  app.add_option("--positions", positions, "number of positions");
  app.add_option("--vocab", vocab, "vocabulary size");
  app.add_option("--listed", listed, "ids listed per position");
  app.add_option("--seed", seed, "mt19937_64 seed");
  CLI11_PARSE(app, argc, argv);

  Uniform rng(seed);
  auto surfaces = make_surfaces(vocab, rng);

  streamcode::Trace trace;
  trace.header = {vocab, "synthetic-word", "synthetic-fixture"};
  std::vector<char> used(vocab);
  for (std::size_t n = 0; n < positions; ++n) {
    // Confidence varies by position: some easy, some hard.
    double tail = 0.06 + 0.34 * std::pow(rng.next(), 1.3);
    double ratio = 0.5 + 0.45 * rng.next();
    std::vector<std::uint32_t> ids;
    std::fill(used.begin(), used.end(), 0);
    while (int(ids.size()) < listed) {
      auto id = std::uint32_t(double(vocab) * std::pow(rng.next(), 2.5));
      if (id >= vocab || used[id]) continue;
      used[id] = 1;
      ids.push_back(id);
    }
    std::vector<double> w(listed);
    double sum = 0;
    for (int j = 0; j < listed; ++j) sum += (w[j] = std::pow(ratio, j));
    streamcode::TraceRecord rec;
    rec.position = n;
    double listed_mass = 0;
    for (int j = 0; j < listed; ++j) {
      double p = std::stod(streamcode::format_probability((1.0 - tail) * w[j] / sum));
      rec.entries.emplace_back(ids[j], p);
      listed_mass += p;
    }
    rec.tail_mass = 1.0 - listed_mass;

    // Draw the realized token from the listed mass or the tail.
    double u = rng.next(), acc = 0;
    bool found = false;
    for (auto [id, p] : rec.entries) {
      acc += p;
      if (u < acc) {
        rec.token = id;
        found = true;
        break;
      }
    }
    if (!found) {
      std::uint32_t id;
      do id = rng.below(std::uint32_t(vocab));
      while (used[id]);
      double share = std::stod(streamcode::format_probability(rec.tail_mass / double(vocab - listed)));
      rec.entries.emplace_back(id, share);
      rec.tail_mass -= share;
      rec.token = id;
    }
    rec.tail_mass = std::stod(streamcode::format_probability(rec.tail_mass));
    rec.surface = surfaces[rec.token];
    trace.records.push_back(std::move(rec));
  }

  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write " << out_path << '\n';
    return 1;
  }
  streamcode::write_trace(out, trace);
  return 0;
}
