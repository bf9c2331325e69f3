#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "hvcm/cli.hpp"
#include "hvcm/generative.hpp"
#include "hvcm/inference.hpp"
#include "hvcm/io.hpp"
#include "hvcm/netstats.hpp"
#include "hvcm/ppc.hpp"
#include "hvcm/seating.hpp"

namespace py = pybind11;
using namespace hvcm;

namespace {

using NamedRecord = std::pair<std::vector<std::string>, std::vector<std::string>>;

std::vector<NamedRecord> named_records(const InteractionLog& log) {
  std::vector<NamedRecord> out;
  out.reserve(log.size());
  for (const auto& rec : log.records()) {
    NamedRecord r;
    for (auto s : rec.senders) r.first.push_back(log.sender_name(s));
    for (auto x : rec.receivers) r.second.push_back(log.receiver_name(x));
    out.push_back(std::move(r));
  }
  return out;
}

InteractionLog log_from_records(const std::vector<NamedRecord>& records, bool shared) {
  InteractionLog log(shared);
  for (const auto& [s, r] : records) log.append_named(s, r);
  return log;
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full{"hvcm"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : full) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = run_subcommand(static_cast<int>(argv.size()), argv.data(), out, err);
  return py::make_tuple(status, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hierarchical vertex components model for structured interaction networks";

  auto base = py::register_exception<Error>(m, "HvcmError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  py::class_<PitmanYor>(m, "PitmanYor")
      .def(py::init<>())
      .def(py::init([](double discount, double concentration) {
             return PitmanYor{discount, concentration};
           }),
           py::arg("discount"), py::arg("concentration"))
      .def_readwrite("discount", &PitmanYor::discount)
      .def_readwrite("concentration", &PitmanYor::concentration)
      .def("__eq__", [](const PitmanYor& a, const PitmanYor& b) { return a == b; })
      .def("__repr__", [](const PitmanYor& p) {
        return "PitmanYor(discount=" + format_double(p.discount) +
               ", concentration=" + format_double(p.concentration) + ")";
      });

  py::class_<Categorical>(m, "Categorical")
      .def(py::init([](std::vector<double> probs) { return Categorical{std::move(probs)}; }),
           py::arg("probs"))
      .def_static("degenerate", &Categorical::degenerate, py::arg("k"))
      .def_static("uniform", &Categorical::uniform, py::arg("lo"), py::arg("hi"))
      .def_readwrite("probs", &Categorical::probs)
      .def("prob", &Categorical::prob, py::arg("k"));

  py::class_<HvcmParams>(m, "HvcmParams")
      .def(py::init<>())
      .def_readwrite("sender", &HvcmParams::sender)
      .def_readwrite("global_", &HvcmParams::global)
      .def_readwrite("default_local", &HvcmParams::default_local)
      .def_readwrite("z", &HvcmParams::z)
      .def_readwrite("sender_size", &HvcmParams::sender_size)
      .def_readwrite("default_receiver_size", &HvcmParams::default_receiver_size)
      .def("set_local",
           [](HvcmParams& p, std::uint32_t s, const PitmanYor& py) { p.local[sender_id(s)] = py; },
           py::arg("sender"), py::arg("params"))
      .def("validate", &HvcmParams::validate)
      .def("to_json", [](const HvcmParams& p) { return params_to_json(p).dump(); })
      .def_static("from_json", [](const std::string& text) {
        return params_from_json(nlohmann::json::parse(text));
      });

  py::class_<InteractionLog>(m, "InteractionLog")
      .def(py::init<bool>(), py::arg("shared_population") = false)
      .def(py::init(&log_from_records), py::arg("records"), py::arg("shared_population") = false)
      .def("append",
           [](InteractionLog& log, const std::vector<std::string>& s,
              const std::vector<std::string>& r) { log.append_named(s, r); },
           py::arg("senders"), py::arg("receivers"))
      .def("records", &named_records)
      .def("__len__", &InteractionLog::size)
      .def("canonical", [](const InteractionLog& log) { return canonicalize(log); })
      .def("restrict",
           [](const InteractionLog& log, const std::vector<std::size_t>& idx) {
             return restrict_log(log, idx);
           },
           py::arg("indices"))
      .def("serialize",
           [](const InteractionLog& log, const std::string& format) {
             return serialize_log(log, parse_format(format), FileHeader{"log", 0, 0, {}});
           },
           py::arg("format") = "jsonl");

  m.def(
      "read_log",
      [](const std::filesystem::path& path, bool strict) {
        return read_log_file(path, format_for_path(path), strict).log;
      },
      py::arg("path"), py::arg("strict") = true);
  m.def(
      "parse_log",
      [](const std::string& text, const std::string& format, bool strict) {
        std::istringstream in(text);
        return read_log(in, parse_format(format), strict).log;
      },
      py::arg("text"), py::arg("format") = "jsonl", py::arg("strict") = true);

  m.def(
      "simulate",
      [](std::size_t n, const HvcmParams& params, std::uint64_t seed) {
        Rng rng(seed);
        return simulate(n, params, rng).log;
      },
      py::arg("n"), py::arg("params"), py::arg("seed"));
  m.def(
      "simulate_conditional",
      [](const InteractionLog& observed, const HvcmParams& params, std::uint64_t seed) {
        Rng rng(seed);
        return simulate_conditional(observed, params, rng).log;
      },
      py::arg("observed"), py::arg("params"), py::arg("seed"));
  m.def(
      "log_likelihood",
      [](const InteractionLog& log, const HvcmParams& params, std::uint64_t seed) {
        Rng rng(seed);
        auto z = sample_attribution(log, params.z, rng);
        return SeatingState::sequential(log, std::move(z), params, rng).log_likelihood(params);
      },
      py::arg("log"), py::arg("params"), py::arg("seed") = 0,
      "Log-likelihood of one sequentially drawn seating and attribution.");
  m.def("marginal_likelihood", &marginal_likelihood_bruteforce, py::arg("log"), py::arg("params"),
        py::arg("max_slots") = 8);

  py::enum_<PriorPreset>(m, "PriorPreset")
      .value("Conjugate", PriorPreset::Conjugate)
      .value("Enron", PriorPreset::Enron)
      .value("HollywoodFitted", PriorPreset::HollywoodFitted);

  py::class_<TraceRecord>(m, "TraceRecord")
      .def_readonly("iteration", &TraceRecord::iteration)
      .def_readonly("global_", &TraceRecord::global)
      .def_readonly("sender", &TraceRecord::sender)
      .def_readonly("log_likelihood", &TraceRecord::log_likelihood)
      .def_readonly("labels", &TraceRecord::labels)
      .def_readonly("tables", &TraceRecord::tables);

  py::class_<GibbsTrace>(m, "GibbsTrace")
      .def_readonly("burn_in", &GibbsTrace::burn_in)
      .def_readonly("records", &GibbsTrace::records)
      .def_readonly("z_posterior_mean", &GibbsTrace::z_posterior_mean)
      .def("__len__", &GibbsTrace::size)
      .def("mean_global", &GibbsTrace::mean_global)
      .def("mean_local", &GibbsTrace::mean_local);

  m.def(
      "fit",
      [](const InteractionLog& log, std::size_t iterations, std::size_t burn_in,
         std::uint64_t seed, PriorPreset preset, std::size_t z_mc_samples) {
        FitConfig cfg;
        cfg.iterations = iterations;
        cfg.burn_in = burn_in;
        cfg.seed = seed;
        cfg.z_mc_samples = z_mc_samples;
        py::gil_scoped_release release;
        return fit(log, default_priors(preset), cfg);
      },
      py::arg("log"), py::arg("iterations") = 1000, py::arg("burn_in") = 500,
      py::arg("seed") = 0, py::arg("preset") = PriorPreset::Conjugate,
      py::arg("z_mc_samples") = 25);

  py::class_<NetStats>(m, "NetStats")
      .def_readonly("v", &NetStats::v)
      .def_readonly("e", &NetStats::e)
      .def_readonly("arity", &NetStats::arity)
      .def_readonly("degree", &NetStats::degree)
      .def("mean_arity", &NetStats::mean_arity)
      .def("degree_distribution", &NetStats::degree_distribution);

  m.def("compute_stats", &compute_stats, py::arg("log"));
  m.def("local_stats", &local_stats, py::arg("log"));
  m.def(
      "sparsity_slope",
      [](const InteractionLog& log, std::size_t checkpoints) {
        auto cps = geometric_checkpoints(std::min<std::size_t>(10, log.size()), log.size(),
                                         checkpoints);
        return sparsity_slope(growth_curve(log, cps));
      },
      py::arg("log"), py::arg("checkpoints") = 20);
  m.def(
      "powerlaw_slope",
      [](const std::vector<double>& d, std::size_t k_lo, std::size_t k_hi) {
        return powerlaw_slope(d, k_lo, k_hi);
      },
      py::arg("d"), py::arg("k_lo") = 2, py::arg("k_hi") = 50);
  m.def("yule_reference", &yule_reference, py::arg("alpha"), py::arg("k"));
  m.def("node_sharing_histogram", &node_sharing_histogram, py::arg("log"));

  m.def(
      "generate_replicates",
      [](const GibbsTrace& trace, const InteractionLog& log, std::size_t m, std::uint64_t seed) {
        py::gil_scoped_release release;
        return generate_replicates(trace, log, m, seed);
      },
      py::arg("trace"), py::arg("log"), py::arg("m"), py::arg("seed"));
  m.def(
      "interval",
      [](const std::vector<double>& values, double level) { return interval(values, level); },
      py::arg("values"), py::arg("level") = 0.95);

  py::class_<StatInterval>(m, "StatInterval")
      .def_readonly("statistic", &StatInterval::statistic)
      .def_readonly("values", &StatInterval::values)
      .def_readonly("lo", &StatInterval::lo)
      .def_readonly("hi", &StatInterval::hi)
      .def_readonly("actual", &StatInterval::actual)
      .def_readonly("covered", &StatInterval::covered);
  py::class_<CoverageRate>(m, "CoverageRate")
      .def_readonly("statistic", &CoverageRate::statistic)
      .def_readonly("covered", &CoverageRate::covered)
      .def_readonly("eligible", &CoverageRate::eligible);
  py::class_<PpcReport>(m, "PpcReport")
      .def_readonly("level", &PpcReport::level)
      .def_readonly("replicates", &PpcReport::replicates)
      .def_readonly("global_", &PpcReport::global)
      .def_readonly("rates", &PpcReport::rates);
  m.def(
      "coverage_report",
      [](const std::vector<InteractionLog>& replicates, const InteractionLog& log, double level,
         std::vector<std::size_t> thresholds) {
        PpcConfig cfg;
        cfg.level = level;
        cfg.degree_thresholds = std::move(thresholds);
        return coverage_report(replicates, log, cfg);
      },
      py::arg("replicates"), py::arg("log"), py::arg("level") = 0.95,
      py::arg("thresholds") = std::vector<std::size_t>{1, 10, 100});

  m.def("run_cli", &run_cli, py::arg("args"),
        "Runs an hvcm subcommand in-process; returns (status, stdout, stderr).");
  const std::string version = version_string();
  m.attr("__version__") = version.substr(version.find(' ') + 1);
}
