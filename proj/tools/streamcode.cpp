// streamcode: tokenize, encode, decode, simulate, sweep, report.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "streamcode/streamcode.hpp"

using namespace streamcode;

namespace {

struct Options {
  std::vector<std::string> inputs;
  std::string trace;
  std::string tokenizer = "word";
  std::string convention = "auto";
  std::string cps = "20";
  std::string predictor = "ngram";
  int order = 3;
  double delta = 0.05;
  std::string coder;
  std::uint32_t k = 16;
  int precision = kDefaultPrecision;
  int renorm_bits = 1;
  int deflate_level = -1;
  std::string alpha_grid;
  std::string alpha = "1";
  std::size_t tokens = 10'000;
  std::string out_dir = "results";
  std::string out;
  unsigned jobs = 0;
};

void add_source_options(CLI::App* cmd, Options& o, bool with_tokens = true) {
  cmd->add_option("--input", o.inputs, "input file (text, or container for decode)");
  cmd->add_option("--trace", o.trace, "probability trace (selects trace replay)");
  cmd->add_option("--tokenizer", o.tokenizer, "char or word");
  cmd->add_option("--convention", o.convention, "character counting: auto, utf8, bytes");
  cmd->add_option("--cps", o.cps, "source character rate lambda (chars/second)");
  cmd->add_option("--predictor", o.predictor, "uniform, unigram, ngram, trace");
  cmd->add_option("--order", o.order, "n-gram order");
  cmd->add_option("--delta", o.delta, "additive smoothing");
  cmd->add_option("--precision", o.precision, "frequency precision F (bits)");
  cmd->add_option("--renorm-bits", o.renorm_bits, "rANS renormalization chunk R");
  cmd->add_option("--deflate-level", o.deflate_level, "zlib level (-1 = default)");
  if (with_tokens) cmd->add_option("--tokens", o.tokens, "token budget");
}

Rational parse_rate(const std::string& s) {
  Rational r = Rational::parse(s);
  if (r <= Rational(0)) throw UsageError("--cps must be positive, got " + s);
  return r;
}

TokenizerSpec tokenizer_of(const Options& o) {
  TokenizerSpec t = TokenizerSpec::parse(o.tokenizer);
  t.convention = parse_char_convention(o.convention);
  return t;
}

bool trace_mode(const Options& o) { return o.predictor == "trace" || (!o.trace.empty() && o.predictor == "ngram" && o.inputs.empty()); }

std::string single_input(const Options& o) {
  if (o.inputs.size() != 1) throw UsageError("exactly one --input is required");
  return o.inputs.front();
}

/// Stream plus predictor spec for encode/simulate.
std::pair<TextInput, PredictorSpec> load_single(const Options& o) {
  SweepConfig cfg;
  cfg.tokenizer = tokenizer_of(o);
  cfg.char_rate = parse_rate(o.cps);
  cfg.predictor = trace_mode(o) ? PredictorKind::TraceReplay : PredictorSpec::parse_kind(o.predictor);
  cfg.order = o.order;
  cfg.delta = o.delta;
  cfg.precision = o.precision;
  cfg.tokens = o.tokens;
  std::string path;
  if (cfg.predictor == PredictorKind::TraceReplay) {
    if (o.trace.empty()) throw UsageError("--predictor trace needs --trace");
    path = o.trace;
    auto tr = std::make_shared<Trace>(read_trace_file(path));
    cfg.tokens = std::min(cfg.tokens, tr->records.size());
  } else {
    path = single_input(o);
  }
  TextInput in = load_input(path, cfg);
  return {in, predictor_for(in, cfg)};
}

CoderSpec coder_of(const Options& o) {
  if (o.coder.empty()) throw UsageError("--coder is required");
  CoderSpec c = CoderSpec::parse(o.coder == "rans" ? "rans-k" + std::to_string(o.k) : o.coder);
  c.rans.renorm_bits = o.renorm_bits;
  c.deflate_level = o.deflate_level;
  c.validate();
  return c;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// ---- tokenize ---------------------------------------------------------------

int cmd_tokenize(const Options& o) {
  std::string text = read_file(single_input(o));
  TokenStream s = tokenize(text, tokenizer_of(o), parse_rate(o.cps));
  std::cout << "# tokenizer=" << s.tokenizer() << "\n# char_rate_cps=" << s.char_rate().str()
            << "\n# char_convention=" << to_string(s.convention()) << "\n# tokens=" << s.size()
            << "\n# chars=" << s.total_chars() << "\n# vocab_size=" << s.vocab_size() << '\n';
  std::cout << "index\ttoken_id\tchars\tt_arr_s\tsurface_hex\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    std::cout << i << '\t' << s[i].token << '\t' << s[i].char_count << '\t' << fmt(s.arrival_time(i).to_double())
              << '\t' << hex_encode(s.surface(i)) << '\n';
  return 0;
}

// ---- encode / decode --------------------------------------------------------

int cmd_encode(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  auto [in, pspec] = load_single(o);
  CoderSpec coder = coder_of(o);
  require_encodable(coder);
  Container c;
  c.payload = encode_stream(in.stream, pspec, coder);
  auto& h = c.header;
  h["coder"] = coder.id();
  h["rans_renorm_bits"] = std::to_string(coder.rans.renorm_bits);
  h["deflate_level"] = std::to_string(coder.deflate_level);
  h["predictor"] = pspec.kind == PredictorKind::TraceReplay ? "trace" : o.predictor;
  h["order"] = std::to_string(pspec.order);
  h["delta"] = format_probability(pspec.delta);
  h["precision"] = std::to_string(pspec.precision);
  h["vocab_size"] = std::to_string(pspec.vocab_size);
  h["tokenizer"] = in.stream.tokenizer();
  h["char_convention"] = std::string(to_string(in.stream.convention()));
  h["cps"] = in.stream.char_rate().str();
  h["tokens"] = std::to_string(in.stream.size());
  h["payload_bits"] = std::to_string(c.payload.size());
  h["crc32"] = crc_hex(crc32_of(in.stream.text()));
  if (in.trace) h["model"] = in.trace->header.model;
  for (std::size_t i = 0; i < in.stream.size(); ++i) c.surfaces[in.stream[i].token] = in.stream.surface(i);

  std::ofstream out(o.out, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + o.out + "'");
  write_container(out, c);
  std::cerr << "encoded " << in.stream.size() << " tokens into " << c.payload.size() << " bits ("
            << fmt(double(c.payload.size()) / double(in.stream.total_chars()), 4) << " bpc)\n";
  return 0;
}

int cmd_decode(const Options& o) {
  std::ifstream f(single_input(o), std::ios::binary);
  if (!f) throw UsageError("cannot open '" + single_input(o) + "'");
  Container c = read_container(f);
  CoderSpec coder = CoderSpec::parse(c.get("coder"));
  coder.rans.renorm_bits = std::stoi(c.get("rans_renorm_bits"));
  coder.deflate_level = std::stoi(c.get("deflate_level"));
  std::size_t count = std::stoul(c.get("tokens"));

  std::string text;
  if (coder.kind == CoderKind::DeflateFlush) {
    text = inflate_all(c.payload.to_bytes());
  } else {
    PredictorSpec p;
    p.kind = PredictorSpec::parse_kind(c.get("predictor"));
    p.order = std::stoi(c.get("order"));
    p.delta = std::stod(c.get("delta"));
    p.precision = std::stoi(c.get("precision"));
    p.vocab_size = std::stoul(c.get("vocab_size"));
    if (p.kind == PredictorKind::TraceReplay) {
      if (o.trace.empty()) throw UsageError("this stream was coded with trace replay; pass the same --trace");
      auto tr = std::make_shared<Trace>(read_trace_file(o.trace));
      if (tr->header.vocab_size != p.vocab_size) throw UsageError("trace vocabulary differs from the encoder's");
      p.trace = tr;
    }
    auto ids = decode_stream(c.payload, count, p, coder);
    for (TokenId id : ids) {
      auto it = c.surfaces.find(id);
      if (it == c.surfaces.end()) throw CorruptStreamError("decoded token " + std::to_string(id) + " has no surface", c.payload.size());
      text += it->second;
    }
  }
  if (crc_hex(crc32_of(text)) != c.get("crc32"))
    throw CorruptStreamError("decoded text fails its checksum", c.payload.size());
  if (o.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw UsageError("cannot write '" + o.out + "'");
    out << text;
  }
  return 0;
}

// ---- simulate ---------------------------------------------------------------

int cmd_simulate(const Options& o) {
  auto [in, pspec] = load_single(o);
  CoderSpec coder = coder_of(o);
  std::vector<CoderSpec> coders{CoderSpec::parse("shannon")};
  if (coder.kind != CoderKind::Shannon) coders.push_back(coder);
  TextRun run = code_text(in, pspec, coders);
  const CoderLedger& l = run.ledgers.back();
  if (!l.ok()) throw Error(l.spec.id() + ": " + l.error);
  Rational alpha = Rational::parse(o.alpha);
  Rational rate = run.channel_rate(alpha);
  DelayTable d = ledger_delays(l, run.stream, rate);
  BitsRow b = bits_row(run, l);
  std::printf("text          %s\ncoder         %s\ntokens        %zu\nbits/token    %.6f\nbpc           %.6f\n"
              "overhead %%    %.3f\nl_Sh bpc      %.6f\nalpha         %s\nC bps         %.6f\nmean delay s  %.6Lf\n"
              "p95 delay s   %.6Lf\nmax delay s   %.6Lf\nstable        %s\n",
              run.name.c_str(), l.spec.id().c_str(), b.tokens, b.bits_per_token, b.bpc, b.overhead_pct,
              run.l_sh().to_double(), o.alpha.c_str(), rate.to_double(), d.mean(), percentile_delay(d, 95), d.max(),
              is_stable(run, l, rate) ? "yes" : "no");
  if (!o.out.empty()) {
    std::ofstream out(o.out);
    if (!out) throw UsageError("cannot write '" + o.out + "'");
    out << "# tool=streamcode simulate\n# text=" << run.name << "\n# tokenizer=" << run.stream.tokenizer()
        << "\n# char_rate_cps=" << run.stream.char_rate().str() << "\n# predictor=" << pspec.describe()
        << "\n# precision_F=" << pspec.precision << "\n# coder=" << l.spec.id()
        << "\n# rans_renorm_bits_R=" << l.spec.rans.renorm_bits << "\n# deflate_level=" << l.spec.deflate_level
        << "\n# alpha=" << o.alpha << "\n# C_bps=" << rate.str() << "\n# tokens=" << run.stream.size() << '\n';
    out << "coder,alpha,token,t_arr_s,decode_time_s,delay_s\n";
    for (std::size_t i = 0; i < d.size(); ++i)
      out << l.spec.id() << ',' << o.alpha << ',' << i << ',' << fmt(d.arrival(i), 9) << ','
          << fmt(d.decode_time(i), 9) << ',' << fmt(d.delay(i), 9) << '\n';
  }
  return 0;
}

// ---- sweep ------------------------------------------------------------------

int cmd_sweep(const Options& o, const std::string& coders, const std::string& k_list) {
  SweepConfig cfg;
  cfg.tokenizer = tokenizer_of(o);
  cfg.char_rate = parse_rate(o.cps);
  cfg.predictor = trace_mode(o) ? PredictorKind::TraceReplay : PredictorSpec::parse_kind(o.predictor);
  cfg.order = o.order;
  cfg.delta = o.delta;
  cfg.precision = o.precision;
  cfg.tokens = o.tokens;
  cfg.rans_renorm_bits = o.renorm_bits;
  cfg.deflate_level = o.deflate_level;
  cfg.jobs = o.jobs;
  if (cfg.predictor == PredictorKind::TraceReplay) {
    cfg.inputs = split_list(o.trace);
    if (cfg.inputs.empty()) throw UsageError("--predictor trace needs --trace");
  } else {
    for (const auto& i : o.inputs)
      for (const auto& p : split_list(i)) cfg.inputs.push_back(p);
  }
  if (!coders.empty()) cfg.coders = split_list(coders);
  if (!k_list.empty()) {
    std::vector<std::string> expanded;
    for (const auto& c : cfg.coders) {
      if (c != "rans") {
        expanded.push_back(c);
        continue;
      }
      for (const auto& k : split_list(k_list)) expanded.push_back("rans-k" + k);
    }
    cfg.coders = expanded;
  }
  if (!o.alpha_grid.empty()) cfg.alphas = split_list(o.alpha_grid);
  SweepResult res = run_sweep(cfg);
  write_results(res, o.out_dir);
  std::cerr << "wrote " << res.bits.size() << " bit rows and " << res.runs.size() << " delay rows to " << o.out_dir
            << '\n';
  return 0;
}

// ---- report -----------------------------------------------------------------

struct Csv {
  std::vector<std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw UsageError("CSV lacks column '" + name + "'");
  }
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') out.back() += '"', ++i;
      else if (c == '"') quoted = false;
      else out.back() += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  Csv csv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      csv.meta.push_back(line);
    } else if (csv.columns.empty()) {
      csv.columns = split_csv_line(line);
    } else {
      csv.rows.push_back(split_csv_line(line));
      if (csv.rows.back().size() != csv.columns.size()) throw Error("ragged row in '" + path + "'");
    }
  }
  if (csv.columns.empty() || csv.rows.empty()) throw Error("'" + path + "' has no data rows");
  return csv;
}

int cmd_report(const std::vector<std::string>& paths) {
  if (paths.empty()) throw UsageError("report needs CSV paths");
  for (const auto& path : paths) {
    Csv csv = read_csv(path);
    std::cout << "== " << path << '\n';
    bool delays = std::find(csv.columns.begin(), csv.columns.end(), "mean_delay_s") != csv.columns.end();
    if (!delays) {
      auto t = csv.col("text"), c = csv.col("coder"), bpt = csv.col("bits_per_token"), bpc = csv.col("bpc");
      // Overhead is recomputed from bpc against the same text's Shannon row.
      std::map<std::string, double> shannon;
      for (const auto& r : csv.rows)
        if (r[c] == "shannon" && !r[bpc].empty()) shannon[r[t]] = std::stod(r[bpc]);
      std::printf("%-22s %-16s %12s %10s %12s\n", "text", "coder", "bits/token", "bpc", "overhead %");
      for (const auto& r : csv.rows) {
        if (r[bpc].empty()) {
          std::printf("%-22s %-16s %12s %10s %12s\n", r[t].c_str(), r[c].c_str(), "error", "-", "-");
          continue;
        }
        auto sh = shannon.find(r[t]);
        std::string over = sh == shannon.end() ? "-" : fmt(100.0 * (std::stod(r[bpc]) / sh->second - 1.0), 1);
        std::printf("%-22s %-16s %12.4f %10.4f %12s\n", r[t].c_str(), r[c].c_str(), std::stod(r[bpt]),
                    std::stod(r[bpc]), over.c_str());
      }
    } else {
      auto t = csv.col("text"), c = csv.col("coder"), a = csv.col("alpha"), rate = csv.col("C_bps"),
           mean = csv.col("mean_delay_s"), p95 = csv.col("p95_delay_s"), st = csv.col("stable");
      std::printf("%-22s %-16s %7s %10s %14s %14s\n", "text", "coder", "alpha", "C bps", "mean delay s", "p95 delay s");
      for (const auto& r : csv.rows) {
        bool ok = !r[mean].empty();
        bool stable = ok && r[st] == "1";
        std::string m = !ok ? "error" : stable ? fmt(std::stod(r[mean]), 3) : "unstable*";
        std::string p = !ok ? "-" : stable ? fmt(std::stod(r[p95]), 3) : "-";
        std::printf("%-22s %-16s %7s %10s %14s %14s\n", r[t].c_str(), r[c].c_str(), r[a].c_str(),
                    fmt(std::stod(r[rate]), 2).c_str(), m.c_str(), p.c_str());
      }
      std::cout << "* queue overloaded (C below the coder's source rate); finite-horizon mean withheld\n";
    }
  }
  return 0;
}

// ---- config file --------------------------------------------------------------

// Flat key=value lines become flags, except keys also given on the command line.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  std::set<std::string> given;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].starts_with("--config=")) path = args[i].substr(9);
    if (args[i].starts_with("--")) given.insert(args[i].substr(2, args[i].find('=') - 2));
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  std::vector<std::string> extra;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line without '=': " + line);
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (given.count(key)) continue;
    extra.push_back("--" + key);
    extra.push_back(value);
  }
  std::vector<std::string> out;
  out.push_back(args.front());
  std::size_t sub = 1;
  out.push_back(args[sub]);
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming predict-then-code compression simulator"};
  app.require_subcommand(1);
  Options o;
  std::string coders, config, k_list;
  std::vector<std::string> report_paths;

  auto* tok = app.add_subcommand("tokenize", "dump the token stream with arrival times");
  tok->add_option("--input", o.inputs, "text file")->required();
  tok->add_option("--tokenizer", o.tokenizer, "char or word");
  tok->add_option("--convention", o.convention, "character counting: auto, utf8, bytes");
  tok->add_option("--cps", o.cps, "source character rate");

  auto* enc = app.add_subcommand("encode", "encode a text into a container");
  add_source_options(enc, o);
  enc->add_option("--coder", o.coder, "huffman-exact, ac, ac-p32, rans, rans-k<K>, deflate")->required();
  enc->add_option("--K", o.k, "rANS block size for --coder rans");
  enc->add_option("--out", o.out, "output container")->required();

  auto* dec = app.add_subcommand("decode", "decode a container back to text");
  dec->add_option("--input", o.inputs, "container")->required();
  dec->add_option("--trace", o.trace, "trace used at encode time (trace replay only)");
  dec->add_option("--out", o.out, "output text (default stdout)");

  auto* sim = app.add_subcommand("simulate", "one coder through one channel rate");
  add_source_options(sim, o);
  sim->add_option("--coder", o.coder, "coder id")->required();
  sim->add_option("--K", o.k, "rANS block size for --coder rans");
  sim->add_option("--alpha", o.alpha, "provisioning ratio C / (lambda l_Sh)");
  sim->add_option("--out", o.out, "per-token delay dump (CSV)");

  auto* sw = app.add_subcommand("sweep", "full alpha sweep; writes bits.csv and delays.csv");
  add_source_options(sw, o);
  sw->add_option("--config", config, "flat key=value config; flags win");
  sw->add_option("--coder,--coders", coders, "comma-separated coder ids");
  sw->add_option("--K", k_list, "comma-separated block sizes substituted for a plain 'rans' coder id");
  sw->add_option("--alpha-grid", o.alpha_grid, "comma-separated alphas");
  sw->add_option("--out-dir", o.out_dir, "output directory");
  sw->add_option("--jobs", o.jobs, "parallel cells (0 = all cores)");

  auto* rep = app.add_subcommand("report", "summarize bits.csv / delays.csv");
  rep->add_option("csv", report_paths, "CSV files")->required();

  try {
    std::vector<std::string> args(argv, argv + argc);
    if (args.size() > 1 && args[1] == "sweep") args = expand_config(args);
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*tok) return cmd_tokenize(o);
    if (*enc) return cmd_encode(o);
    if (*dec) return cmd_decode(o);
    if (*sim) return cmd_simulate(o);
    if (*sw) return cmd_sweep(o, coders, k_list);
    if (*rep) return cmd_report(report_paths);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
