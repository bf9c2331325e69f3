#include "hvcm/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hvcm/generative.hpp"
#include "hvcm/inference.hpp"
#include "hvcm/io.hpp"
#include "hvcm/netstats.hpp"
#include "hvcm/ppc.hpp"

namespace hvcm {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string input;
  std::string output;
  std::string format;
  std::string trace;
  std::uint64_t seed = 0;
  bool lenient = false;
};

struct SimulateOptions {
  std::size_t n = 0;
  std::string model = "hvcm";
  std::string params_file;
  double sender_alpha = 0.5, sender_theta = 10.0;
  double alpha = 0.5, theta = 10.0;
  double local_alpha = 0.5, local_theta = 1.0;
  double z_alpha = 0.5, z_theta = 10.0;
  std::size_t max_senders = 1;
  std::size_t max_receivers = 1;
};

struct FitOptions {
  std::size_t iterations = 1000;
  std::size_t burn_in = 500;
  std::size_t z_mc = 25;
  std::size_t z_every = 1;
  std::string preset = "conjugate";
  bool sample_sender_params = false;
};

struct PpcOptions {
  std::size_t replicates = 100;
  double level = 0.95;
  std::vector<std::size_t> thresholds{1, 10, 100};
};

struct StatsOptions {
  std::size_t checkpoints = 20;
  std::size_t k_min = 2;
  std::size_t k_max = 50;
};

// Hash of every option except file locations, plus the bytes of each input file,
// so the same data and settings reproduce the same header wherever files live.
std::uint64_t config_hash(const CLI::App& sub, const std::vector<std::string>& inputs) {
  std::string text = sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (name == "--input" || name == "--output" || name == "--trace" || name == "--help" ||
        name == "-h,--help" || opt->count() == 0) {
      continue;
    }
    text += '\n' + name + '=';
    for (const auto& r : opt->results()) text += r + ',';
  }
  std::uint64_t h = fnv1a(text);
  for (const auto& path : inputs) h = fnv1a(read_file(path), h);
  return h;
}

LogFormat resolve_format(const std::string& flag, const std::string& path) {
  return flag.empty() ? format_for_path(path) : parse_format(flag);
}

InteractionLog load_log(const CommonOptions& c, std::ostream& err) {
  auto res = read_log_file(c.input, resolve_format(c.format, c.input), !c.lenient);
  for (const auto& issue : res.skipped) {
    err << "hvcm: skipped line " << issue.line << ", column " << issue.column << ": "
        << issue.reason << '\n';
  }
  return std::move(res.log);
}

fs::path suffixed(const std::string& prefix, const char* suffix) {
  return fs::path(prefix + suffix);
}

int run_simulate(const CLI::App& sub, const CommonOptions& c, const SimulateOptions& o,
                 std::ostream& out) {
  Rng rng(c.seed);
  InteractionLog log;
  if (o.model == "hollywood") {
    log = hollywood_simulate(o.n, PitmanYor{o.alpha, o.theta},
                             Categorical::uniform(1, o.max_receivers), rng);
  } else {
    HvcmParams params;
    if (!o.params_file.empty()) {
      params = params_from_json(nlohmann::json::parse(read_file(o.params_file)));
    }
    auto set = [&](const char* name) { return sub.get_option(name)->count() > 0; };
    if (o.params_file.empty() || set("--sender-alpha")) params.sender.discount = o.sender_alpha;
    if (o.params_file.empty() || set("--sender-theta")) params.sender.concentration = o.sender_theta;
    if (o.params_file.empty() || set("--alpha")) params.global.discount = o.alpha;
    if (o.params_file.empty() || set("--theta")) params.global.concentration = o.theta;
    if (o.params_file.empty() || set("--local-alpha")) params.default_local.discount = o.local_alpha;
    if (o.params_file.empty() || set("--local-theta")) {
      params.default_local.concentration = o.local_theta;
    }
    if (o.params_file.empty() || set("--z-alpha")) params.z.discount = o.z_alpha;
    if (o.params_file.empty() || set("--z-theta")) params.z.concentration = o.z_theta;
    if (o.params_file.empty() || set("--max-senders")) {
      params.sender_size = Categorical::uniform(1, o.max_senders);
    }
    if (o.params_file.empty() || set("--max-receivers")) {
      params.default_receiver_size = Categorical::uniform(1, o.max_receivers);
    }
    log = simulate(o.n, params, rng).log;
  }
  std::vector<std::string> inputs;
  if (!o.params_file.empty()) inputs.push_back(o.params_file);
  FileHeader header{"interaction-log", c.seed, config_hash(sub, inputs), {}};
  write_file_atomic(c.output, serialize_log(log, resolve_format(c.format, c.output), header));
  out << "wrote " << log.size() << " interactions to " << c.output << '\n';
  return 0;
}

int run_fit(const CLI::App& sub, const CommonOptions& c, const FitOptions& o, std::ostream& out,
            std::ostream& err) {
  const auto log = load_log(c, err);
  PriorPreset preset = PriorPreset::Conjugate;
  if (o.preset == "enron") preset = PriorPreset::Enron;
  if (o.preset == "hollywood-fitted") preset = PriorPreset::HollywoodFitted;
  FitConfig config;
  config.iterations = o.iterations;
  config.burn_in = o.burn_in;
  config.seed = c.seed;
  config.z_mc_samples = o.z_mc;
  config.z_every = o.z_every;
  config.sample_sender_params = o.sample_sender_params;
  const auto trace = fit(log, default_priors(preset), config);
  FileHeader header{"gibbs-trace", c.seed, config_hash(sub, {c.input}), {{"preset", o.preset}}};
  write_trace(c.output, trace, log, header);
  const auto g = trace.mean_global();
  out << "posterior mean theta=" << format_double(g.concentration)
      << " alpha=" << format_double(g.discount) << " over " << trace.size() - trace.burn_in
      << " post-burn-in iterations\n";
  return 0;
}

std::string rate_text(const CoverageRate& r) {
  return std::to_string(r.covered) + "/" + std::to_string(r.eligible);
}

int run_ppc(const CLI::App& sub, const CommonOptions& c, const PpcOptions& o, std::ostream& out,
            std::ostream& err) {
  const auto log = load_log(c, err);
  const auto trace = read_trace(c.trace, log);
  const auto replicates = generate_replicates(trace, log, o.replicates, c.seed);
  PpcConfig config;
  config.level = o.level;
  config.degree_thresholds = o.thresholds;
  const auto report = coverage_report(replicates, log, config);

  std::vector<std::string> inputs{c.input, c.trace, c.trace + ".local.tsv"};
  FileHeader header{"ppc-report", c.seed, config_hash(sub, inputs),
                    {{"level", format_double(o.level)},
                     {"replicates", std::to_string(o.replicates)},
                     {"note", "replicates keep the observed sender sequence and receiver counts; "
                              "new senders cannot appear, new receivers can"}}};
  std::ostringstream tsv;
  tsv << comment_header(header);
  tsv << "scope\tsender\tstatistic\tactual\tlo\thi\tcovered\treplicate_mean\n";
  auto row = [&](const char* scope, const std::string& sender, const StatInterval& s) {
    double mean = 0.0;
    for (double v : s.values) mean += v / static_cast<double>(s.values.size());
    tsv << scope << '\t' << sender << '\t' << s.statistic << '\t' << format_double(s.actual)
        << '\t' << format_double(s.lo) << '\t' << format_double(s.hi) << '\t'
        << (s.covered ? 1 : 0) << '\t' << format_double(mean) << '\n';
  };
  for (const auto& s : report.global) row("global", "-", s);
  for (const auto& l : report.local) row("local", log.sender_name(l.sender), l.stat);
  for (const auto& r : report.rates) {
    tsv << "rate\t-\t" << r.statistic << '\t' << r.covered << '\t' << r.eligible << '\t'
        << r.eligible << '\t' << rate_text(r) << "\tNA\n";
  }
  write_file_atomic(c.output, tsv.str());

  std::ostringstream summary;
  summary << "Posterior predictive intervals (" << format_double(o.level * 100) << "%, "
          << report.replicates << " replicates)\n";
  summary << std::left << std::setw(26) << "statistic" << std::setw(14) << "actual"
          << std::setw(44) << "interval" << "covered\n";
  for (const auto& s : report.global) {
    std::ostringstream iv;
    iv << "[" << format_double(s.lo) << ", " << format_double(s.hi) << "]";
    summary << std::setw(26) << s.statistic << std::setw(14) << format_double(s.actual)
            << std::setw(44) << iv.str() << (s.covered ? "yes" : "no") << '\n';
  }
  summary << "\nLocal coverage rates\n";
  for (const auto& r : report.rates) {
    summary << std::setw(26) << r.statistic << rate_text(r) << '\n';
  }
  write_file_atomic(suffixed(c.output, ".summary.txt"), comment_header(header) + summary.str());
  out << summary.str();
  return 0;
}

int run_stats(const CLI::App& sub, const CommonOptions& c, const StatsOptions& o,
              std::ostream& out, std::ostream& err) {
  const auto log = load_log(c, err);
  const auto stats = compute_stats(log);
  const auto local = local_stats(log);
  FileHeader header{"netstats", 0, config_hash(sub, {c.input}),
                    {{"local_semantics", "multi-sender interactions count for every listed sender"}}};

  std::ostringstream degree;
  FileHeader h = header;
  h.kind = "netstats.degree";
  degree << comment_header(h) << "k\tN_k\td_k\n";
  const auto d = stats.degree_distribution();
  for (std::size_t k = 1; k < stats.degree.size(); ++k) {
    if (stats.degree[k] == 0) continue;
    degree << k << '\t' << stats.degree[k] << '\t' << format_double(d[k]) << '\n';
  }
  write_file_atomic(suffixed(c.output, ".degree.tsv"), degree.str());

  std::ostringstream ldeg;
  h.kind = "netstats.local_degree";
  ldeg << comment_header(h) << "sender\tk\tN_k\td_k\n";
  for (std::uint32_t s = 0; s < local.size(); ++s) {
    const auto ld = local[s].degree_distribution();
    for (std::size_t k = 1; k < local[s].degree.size(); ++k) {
      if (local[s].degree[k] == 0) continue;
      ldeg << log.sender_name(sender_id(s)) << '\t' << k << '\t' << local[s].degree[k] << '\t'
           << format_double(ld[k]) << '\n';
    }
  }
  write_file_atomic(suffixed(c.output, ".local_degree.tsv"), ldeg.str());

  std::ostringstream sharing;
  h.kind = "netstats.sharing";
  sharing << comment_header(h) << "senders\treceivers\n";
  const auto hist = node_sharing_histogram(log);
  for (std::size_t k = 1; k < hist.size(); ++k) sharing << k << '\t' << hist[k] << '\n';
  write_file_atomic(suffixed(c.output, ".sharing.tsv"), sharing.str());

  std::ostringstream growth;
  h.kind = "netstats.growth";
  growth << comment_header(h) << "n\tv\te\tmean_arity\tsparsity_ratio\n";
  const auto checkpoints = geometric_checkpoints(1, log.size(), o.checkpoints);
  const auto curve = growth_curve(log, checkpoints);
  for (const auto& p : curve) {
    growth << p.n << '\t' << p.v << '\t' << p.e << '\t' << format_double(p.mean_arity) << '\t'
           << format_double(sparsity_ratio(p)) << '\n';
  }
  write_file_atomic(suffixed(c.output, ".growth.tsv"), growth.str());

  auto try_value = [](auto&& f) -> std::string {
    try {
      return format_double(f());
    } catch (const Error&) {
      return "NA";
    }
  };
  std::ostringstream summary;
  h.kind = "netstats.summary";
  summary << comment_header(h) << "statistic\tvalue\n";
  summary << "unique_receivers\t" << stats.v << '\n';
  summary << "interactions\t" << stats.e << '\n';
  summary << "mean_arity\t" << format_double(stats.mean_arity()) << '\n';
  summary << "sparsity_slope\t" << try_value([&] { return sparsity_slope(curve); }) << '\n';
  summary << "powerlaw_exponent_k" << o.k_min << "_" << o.k_max << '\t'
          << try_value([&] { return powerlaw_slope(d, o.k_min, o.k_max); }) << '\n';
  write_file_atomic(suffixed(c.output, ".summary.tsv"), summary.str());
  out << "v=" << stats.v << " e=" << stats.e << " mean_arity=" << format_double(stats.mean_arity())
      << '\n';
  return 0;
}

int run_overlap(const CLI::App& sub, const CommonOptions& c, std::ostream& out,
                std::ostream& err) {
  const auto log = load_log(c, err);
  if (!log.has_multi_sender()) throw Error("no qualifying interactions (no multi-sender records)");
  const auto trace = read_trace(c.trace, log);
  const auto entries = overlap_matrix(trace, log);
  std::vector<std::string> inputs{c.input, c.trace + ".z.tsv"};
  FileHeader header{"subject-overlap", trace.seed, config_hash(sub, inputs), {}};
  std::ostringstream tsv;
  tsv << comment_header(header) << "sender_1\tsender_2\tscore\tinteractions\n";
  for (const auto& e : entries) {
    tsv << log.sender_name(e.s1) << '\t' << log.sender_name(e.s2) << '\t'
        << format_double(e.score) << '\t' << e.interactions << '\n';
  }
  write_file_atomic(c.output, tsv.str());
  out << "wrote " << entries.size() << " sender pairs to " << c.output << '\n';
  return 0;
}

void add_input(CLI::App* sub, CommonOptions& c) {
  sub->add_option("--input", c.input, "interaction log")->required()->check(CLI::ExistingFile);
  sub->add_option("--format", c.format, "log format: jsonl or csv (default from extension)")
      ->check(CLI::IsMember({"jsonl", "json", "csv"}));
  sub->add_flag("--lenient", c.lenient, "skip malformed lines instead of failing");
}

}  // namespace

int run_subcommand(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical vertex components model for structured interaction networks", "hvcm"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  CommonOptions c;
  SimulateOptions so;
  FitOptions fo;
  PpcOptions po;
  StatsOptions sto;

  auto* sim = app.add_subcommand("simulate", "simulate an interaction log");
  sim->add_option("--n", so.n, "number of interactions")->required();
  sim->add_option("--output", c.output, "output log file")->required();
  sim->add_option("--format", c.format, "jsonl or csv (default from extension)")
      ->check(CLI::IsMember({"jsonl", "json", "csv"}));
  sim->add_option("--seed", c.seed, "random seed")->required();
  sim->add_option("--model", so.model, "hvcm or hollywood")
      ->check(CLI::IsMember({"hvcm", "hollywood"}));
  sim->add_option("--params", so.params_file, "JSON parameter file")->check(CLI::ExistingFile);
  sim->add_option("--sender-alpha", so.sender_alpha, "sender urn discount");
  sim->add_option("--sender-theta", so.sender_theta, "sender urn concentration");
  sim->add_option("--alpha", so.alpha, "global discount (hollywood: urn discount)");
  sim->add_option("--theta", so.theta, "global concentration (hollywood: urn concentration)");
  sim->add_option("--local-alpha", so.local_alpha, "per-sender discount");
  sim->add_option("--local-theta", so.local_theta, "per-sender concentration");
  sim->add_option("--z-alpha", so.z_alpha, "attribution urn discount");
  sim->add_option("--z-theta", so.z_theta, "attribution urn concentration");
  sim->add_option("--max-senders", so.max_senders, "senders per interaction ~ uniform{1..K}")
      ->check(CLI::PositiveNumber);
  sim->add_option("--max-receivers", so.max_receivers, "receivers per interaction ~ uniform{1..K}")
      ->check(CLI::PositiveNumber);

  auto* fit_cmd = app.add_subcommand("fit", "run the Gibbs sampler and write a trace");
  add_input(fit_cmd, c);
  fit_cmd->add_option("--output", c.output, "trace path prefix")->required();
  fit_cmd->add_option("--seed", c.seed, "random seed")->required();
  fit_cmd->add_option("--iterations", fo.iterations, "Gibbs iterations")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--burn-in", fo.burn_in, "iterations discarded as burn-in");
  fit_cmd->add_option("--z-mc", fo.z_mc, "Monte Carlo seatings per candidate sender")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--z-every", fo.z_every, "resample attributions every k iterations")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--preset", fo.preset, "conjugate, enron or hollywood-fitted")
      ->check(CLI::IsMember({"conjugate", "enron", "hollywood-fitted"}));
  fit_cmd->add_flag("--sample-sender-params", fo.sample_sender_params,
                    "sample the sender urn parameters instead of fixing them");

  auto* ppc_cmd = app.add_subcommand("ppc", "posterior predictive check");
  add_input(ppc_cmd, c);
  ppc_cmd->add_option("--trace", c.trace, "trace path prefix written by fit")->required();
  ppc_cmd->add_option("--output", c.output, "report file")->required();
  ppc_cmd->add_option("--seed", c.seed, "random seed")->required();
  ppc_cmd->add_option("--replicates", po.replicates, "number of replicates")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  ppc_cmd->add_option("--level", po.level, "interval level")->check(CLI::Range(0.0, 1.0));
  ppc_cmd->add_option("--thresholds", po.thresholds, "receiver degree thresholds")->delimiter(',');

  auto* stats_cmd = app.add_subcommand("stats", "network statistics tables");
  add_input(stats_cmd, c);
  stats_cmd->add_option("--output", c.output, "output path prefix")->required();
  stats_cmd->add_option("--checkpoints", sto.checkpoints, "growth checkpoints")
      ->check(CLI::PositiveNumber);
  stats_cmd->add_option("--k-min", sto.k_min, "smallest degree in the power-law fit")
      ->check(CLI::PositiveNumber);
  stats_cmd->add_option("--k-max", sto.k_max, "largest degree in the power-law fit")
      ->check(CLI::PositiveNumber);

  auto* overlap_cmd = app.add_subcommand("overlap", "subject overlap scores");
  add_input(overlap_cmd, c);
  overlap_cmd->add_option("--trace", c.trace, "trace path prefix written by fit")->required();
  overlap_cmd->add_option("--output", c.output, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (sim->parsed()) return run_simulate(*sim, c, so, out);
    if (fit_cmd->parsed()) return run_fit(*fit_cmd, c, fo, out, err);
    if (ppc_cmd->parsed()) return run_ppc(*ppc_cmd, c, po, out, err);
    if (stats_cmd->parsed()) return run_stats(*stats_cmd, c, sto, out, err);
    if (overlap_cmd->parsed()) return run_overlap(*overlap_cmd, c, out, err);
  } catch (const std::exception& e) {
    err << "hvcm: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace hvcm
