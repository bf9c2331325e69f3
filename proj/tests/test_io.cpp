#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "hvcm/cli.hpp"
#include "hvcm/generative.hpp"
#include "hvcm/inference.hpp"
#include "hvcm/io.hpp"
#include "oracles.hpp"

using namespace hvcm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("hvcm_test_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct CliResult {
  int status;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "hvcm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = run_subcommand(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

IngestResult parse(const std::string& text, LogFormat format, bool strict = true) {
  std::istringstream in(text);
  return read_log(in, format, strict);
}

void check_same_log(const InteractionLog& a, const InteractionLog& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    std::vector<std::string> sa, sb, ra, rb;
    for (auto s : a[n].senders) sa.push_back(a.sender_name(s));
    for (auto s : b[n].senders) sb.push_back(b.sender_name(s));
    for (auto r : a[n].receivers) ra.push_back(a.receiver_name(r));
    for (auto r : b[n].receivers) rb.push_back(b.receiver_name(r));
    CHECK(sa == sb);
    CHECK(ra == rb);
  }
}

HvcmParams multi_params() {
  HvcmParams p;
  p.sender = {0.3, 2.0};
  p.global = {0.4, 3.0};
  p.default_local = {0.5, 1.5};
  p.z = {0.25, 0.8};
  p.sender_size = Categorical{{0.6, 0.4}};
  p.default_receiver_size = Categorical::uniform(1, 3);
  return p;
}

}  // namespace

TEST_CASE("jsonl example") {
  auto r = parse(R"({"senders": ["a"], "receivers": ["b", "c"]})"
                 "\n",
                 LogFormat::Jsonl);
  REQUIRE(r.log.size() == 1);
  CHECK(r.log[0].senders.size() == 1);
  CHECK(r.log[0].receivers.size() == 2);
  CHECK(r.log.sender_name(r.log[0].senders[0]) == "a");
  CHECK(r.log.receiver_name(r.log[0].receivers[1]) == "c");
  CHECK(r.skipped.empty());
}

TEST_CASE("round trips through both formats") {
  Rng rng(1);
  for (int t = 0; t < 30; ++t) {
    auto log = canonicalize(oracle::random_log(1 + rng.uniform_index(40), 5, 20, 3, 4, rng));
    FileHeader h{"log", 7, 0xabcdef, {{"k", "v"}}};
    for (auto fmt : {LogFormat::Jsonl, LogFormat::Csv}) {
      auto back = parse(serialize_log(log, fmt, h), fmt);
      check_same_log(log, back.log);
      CHECK(serialize_log(back.log, fmt, h) == serialize_log(log, fmt, h));
    }
  }
  auto jh = parse(serialize_log(canonicalize(oracle::random_log(3, 2, 2, 1, 1, rng)),
                                LogFormat::Jsonl, FileHeader{"log", 3, 1, {}}),
                  LogFormat::Jsonl);
  CHECK(jh.header["kind"] == "log");
  CHECK(jh.header["seed"] == 3);
}

TEST_CASE("csv quoting and comments") {
  std::string text =
      "# comment\n"
      "interaction_id,role,name\n"
      "1,sender,\"a,b\"\n"
      "1,receiver,\"say \"\"hi\"\"\"\n"
      "2,sender,c\n"
      "2,receiver,d\n";
  auto r = parse(text, LogFormat::Csv);
  REQUIRE(r.log.size() == 2);
  CHECK(r.log.sender_name(r.log[0].senders[0]) == "a,b");
  CHECK(r.log.receiver_name(r.log[0].receivers[0]) == "say \"hi\"");
}

TEST_CASE("strict mode reports the first malformed line") {
  std::string text =
      "{\"senders\": [\"a\"], \"receivers\": [\"b\"]}\n"
      "{\"senders\": [\"a\"], \"receivers\": []}\n"
      "not json\n";
  try {
    parse(text, LogFormat::Jsonl);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() >= 1);
  }
  auto lenient = parse(text, LogFormat::Jsonl, false);
  CHECK(lenient.log.size() == 1);
  REQUIRE(lenient.skipped.size() == 2);
  CHECK(lenient.skipped[0].line == 2);
  CHECK(lenient.skipped[1].line == 3);
  CHECK_THROWS_AS(parse("", LogFormat::Jsonl), ParseError);
  CHECK_THROWS_AS(parse("\n\n", LogFormat::Jsonl, false), ParseError);
  CHECK_THROWS_AS(parse("interaction_id,role,name\n", LogFormat::Csv), ParseError);
  try {
    parse("1,sender,a\n1,boss,b\n", LogFormat::Csv);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("large ingest") {
  std::string text;
  text.reserve(50'000'000);
  for (int i = 0; i < 1'000'000; ++i) {
    text += "{\"senders\":[\"s" + std::to_string(i % 997) + "\"],\"receivers\":[\"r" +
            std::to_string(i % 10007) + "\"]}\n";
  }
  auto r = parse(text, LogFormat::Jsonl);
  CHECK(r.log.size() == 1'000'000);
  CHECK(r.log.num_sender_ids() == 997);
}

TEST_CASE("double formatting round trips") {
  Rng rng(2);
  const double specials[] = {0.0, -0.0, 1.0, 0.1, 1e-300, 1e300,
                             std::numeric_limits<double>::denorm_min(),
                             std::numeric_limits<double>::max()};
  for (double v : specials) CHECK(parse_double(format_double(v)) == v);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::ldexp(rng.uniform() - 0.5, static_cast<int>(rng.uniform_index(200)) - 100);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK_THROWS_AS(parse_double("abc"), Error);
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(255) == "00000000000000ff");
}

TEST_CASE("params json is bit exact") {
  HvcmParams p = multi_params();
  p.global = {1.0 / 3.0, std::sqrt(2.0)};
  auto j = params_to_json(p);
  for (const auto& [k, v] : j["global"].items()) CHECK(v.is_string());
  auto back = params_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.global == p.global);
  CHECK(back.sender == p.sender);
  CHECK(back.z == p.z);
  CHECK(back.default_local == p.default_local);
  CHECK(back.sender_size.probs == p.sender_size.probs);
  CHECK(params_to_json(back) == j);
}

TEST_CASE("atomic write and trace round trip") {
  TempDir dir("trace");
  write_file_atomic(dir / "a.txt", "hello");
  CHECK(read_file(dir / "a.txt") == "hello");
  write_file_atomic(dir / "a.txt", "bye");
  CHECK(read_file(dir / "a.txt") == "bye");
  CHECK_THROWS_AS(read_file(dir / "missing.txt"), Error);

  Rng rng(3);
  auto log = simulate(60, multi_params(), rng).log;
  FitConfig cfg;
  cfg.iterations = 12;
  cfg.burn_in = 4;
  cfg.seed = 5;
  cfg.z_mc_samples = 3;
  auto trace = fit(log, default_priors(PriorPreset::Conjugate), cfg);
  write_trace(dir / "t.tsv", trace, log, FileHeader{"gibbs-trace", 5, 1, {}});
  auto back = read_trace(dir / "t.tsv", log);
  REQUIRE(back.size() == trace.size());
  CHECK(back.burn_in == trace.burn_in);
  for (std::size_t t = 0; t < trace.size(); ++t) {
    CHECK(back.records[t].global == trace.records[t].global);
    CHECK(back.records[t].sender == trace.records[t].sender);
    CHECK(back.records[t].log_likelihood == trace.records[t].log_likelihood);
    CHECK(back.local[t] == trace.local[t]);
  }
  CHECK(back.multi_sender == trace.multi_sender);
  CHECK(back.z_posterior_mean == trace.z_posterior_mean);
  CHECK(back.receiver_size.probs == trace.receiver_size.probs);
  for (std::size_t t = 0; t < trace.size(); t += 3) {
    CHECK(back.params_at(t).global == trace.params_at(t).global);
  }
}

TEST_CASE("cli simulate") {
  TempDir dir("sim");
  auto r = run({"simulate", "--n", "0", "--output", dir / "empty.jsonl", "--seed", "1"});
  CHECK(r.status == 0);
  auto r2 = run({"simulate", "--n", "200", "--output", dir / "a.csv", "--seed", "4",
                 "--max-senders", "2", "--max-receivers", "3"});
  REQUIRE(r2.status == 0);
  auto loaded = read_log_file(dir / "a.csv", LogFormat::Csv);
  CHECK(loaded.log.size() == 200);
  auto r3 = run({"simulate", "--n", "200", "--output", dir / "b.csv", "--seed", "4",
                 "--max-senders", "2", "--max-receivers", "3"});
  CHECK(read_file(dir / "a.csv") == read_file(dir / "b.csv"));
  auto bad = run({"simulate", "--n", "5"});
  CHECK(bad.status != 0);
  auto hw = run({"simulate", "--model", "hollywood", "--n", "50", "--output", dir / "h.jsonl",
                 "--seed", "2"});
  CHECK(hw.status == 0);
}

TEST_CASE("cli overlap without multi-sender records") {
  TempDir dir("overlap");
  REQUIRE(run({"simulate", "--n", "30", "--output", dir / "s.jsonl", "--seed", "1"}).status == 0);
  REQUIRE(run({"fit", "--input", dir / "s.jsonl", "--output", dir / "t", "--seed", "1",
               "--iterations", "5", "--burn-in", "2"})
              .status == 0);
  auto r = run({"overlap", "--input", dir / "s.jsonl", "--trace", dir / "t", "--output",
                dir / "o.tsv"});
  CHECK(r.status != 0);
  CHECK(r.err.find("no qualifying interactions") != std::string::npos);
}

TEST_CASE("cli pipeline is deterministic") {
  auto pipeline = [](const TempDir& dir) {
    std::vector<std::string> outputs;
    REQUIRE(run({"simulate", "--n", "150", "--output", dir / "log.jsonl", "--seed", "9",
                 "--max-senders", "2", "--max-receivers", "3"})
                .status == 0);
    REQUIRE(run({"fit", "--input", dir / "log.jsonl", "--output", dir / "trace", "--seed", "3",
                 "--iterations", "30", "--burn-in", "10", "--z-mc", "4"})
                .status == 0);
    REQUIRE(run({"ppc", "--input", dir / "log.jsonl", "--trace", dir / "trace", "--output",
                 dir / "ppc.tsv", "--seed", "5", "--replicates", "10"})
                .status == 0);
    REQUIRE(run({"stats", "--input", dir / "log.jsonl", "--output", dir / "st"}).status == 0);
    REQUIRE(run({"overlap", "--input", dir / "log.jsonl", "--trace", dir / "trace", "--output",
                 dir / "ov.tsv"})
                .status == 0);
    for (const char* f : {"log.jsonl", "trace", "trace.local.tsv", "trace.z.tsv", "ppc.tsv",
                          "ppc.tsv.summary.txt", "st.degree.tsv", "st.growth.tsv", "ov.tsv"}) {
      outputs.push_back(read_file(dir / f));
    }
    return outputs;
  };
  TempDir a("pipe_a"), b("pipe_b");
  auto oa = pipeline(a);
  auto ob = pipeline(b);
  REQUIRE(oa.size() == ob.size());
  for (std::size_t i = 0; i < oa.size(); ++i) CHECK(oa[i] == ob[i]);
}
