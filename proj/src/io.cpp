#include "hvcm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace hvcm {

using nlohmann::json;
namespace fs = std::filesystem;

LogFormat parse_format(std::string_view name) {
  if (name == "jsonl" || name == "json") return LogFormat::Jsonl;
  if (name == "csv") return LogFormat::Csv;
  throw Error("unknown log format '" + std::string(name) + "' (expected jsonl or csv)");
}

LogFormat format_for_path(const fs::path& path) {
  return path.extension() == ".csv" ? LogFormat::Csv : LogFormat::Jsonl;
}

ParseError::ParseError(std::size_t line, std::size_t column, std::string reason)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + reason),
      line_(line),
      column_(column),
      reason_(std::move(reason)) {}

namespace {

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::vector<std::string> string_list(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing \"") + key + "\"");
  if (!it->is_array()) throw std::invalid_argument(std::string("\"") + key + "\" is not an array");
  if (it->empty()) throw std::invalid_argument(std::string("\"") + key + "\" is empty");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw std::invalid_argument(std::string("\"") + key + "\" has a non-string entry");
    }
    if (v.get_ref<const std::string&>().empty()) {
      throw std::invalid_argument(std::string("\"") + key + "\" has an empty name");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

class Reporter {
 public:
  Reporter(bool strict, std::vector<ParseIssue>& sink) : strict_(strict), sink_(sink) {}

  void issue(std::size_t line, std::size_t column, std::string reason) {
    if (strict_) throw ParseError(line, column, std::move(reason));
    sink_.push_back({line, column, std::move(reason)});
  }

 private:
  bool strict_;
  std::vector<ParseIssue>& sink_;
};

void read_jsonl(std::istream& in, IngestResult& out, Reporter& rep) {
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    json obj;
    try {
      obj = json::parse(trim_cr(line));
    } catch (const json::parse_error& e) {
      rep.issue(lineno, std::max<std::size_t>(e.byte, 1), "invalid JSON");
      first = false;
      continue;
    }
    if (!obj.is_object()) {
      rep.issue(lineno, 1, "expected a JSON object");
      first = false;
      continue;
    }
    if (auto h = obj.find("hvcm_header"); h != obj.end()) {
      if (!first) {
        rep.issue(lineno, 1, "header line after the first line");
      } else {
        out.header = *h;
      }
      first = false;
      continue;
    }
    first = false;
    try {
      const auto senders = string_list(obj, "senders");
      const auto receivers = string_list(obj, "receivers");
      out.log.append_named(senders, receivers);
    } catch (const std::invalid_argument& e) {
      rep.issue(lineno, 1, e.what());
    }
  }
}

struct CsvField {
  std::string text;
  std::size_t column;
};

// Splits one CSV line; quoted fields may contain commas and doubled quotes.
std::vector<CsvField> split_csv(std::string_view line, std::size_t& bad_column) {
  std::vector<CsvField> fields;
  std::size_t i = 0;
  bad_column = 0;
  while (true) {
    CsvField f{"", i + 1};
    if (i < line.size() && line[i] == '"') {
      ++i;
      while (true) {
        if (i >= line.size()) {
          bad_column = f.column;
          return fields;
        }
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            f.text.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        f.text.push_back(line[i++]);
      }
      if (i < line.size() && line[i] != ',') {
        bad_column = i + 1;
        return fields;
      }
    } else {
      while (i < line.size() && line[i] != ',') f.text.push_back(line[i++]);
    }
    fields.push_back(std::move(f));
    if (i >= line.size()) break;
    ++i;  // comma
  }
  return fields;
}

void read_csv(std::istream& in, IngestResult& out, Reporter& rep) {
  struct Group {
    std::size_t line;
    std::vector<std::string> senders;
    std::vector<std::string> receivers;
  };
  std::vector<Group> groups;
  std::map<std::string, std::size_t> group_of;
  std::string raw;
  std::size_t lineno = 0;
  bool seen_row = false;
  json comments = json::array();
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = trim_cr(raw);
    if (blank(line)) continue;
    if (line.front() == '#') {
      comments.push_back(std::string(line.substr(1)));
      continue;
    }
    std::size_t bad = 0;
    auto fields = split_csv(line, bad);
    if (bad != 0) {
      rep.issue(lineno, bad, "malformed quoted field");
      continue;
    }
    if (!seen_row) {
      seen_row = true;
      if (fields.size() == 3 && fields[0].text == "interaction_id" && fields[1].text == "role" &&
          fields[2].text == "name") {
        continue;
      }
    }
    if (fields.size() != 3) {
      rep.issue(lineno, fields.size() > 3 ? fields[3].column : line.size() + 1,
                "expected 3 fields (interaction_id,role,name)");
      continue;
    }
    if (fields[0].text.empty()) {
      rep.issue(lineno, fields[0].column, "empty interaction_id");
      continue;
    }
    if (fields[1].text != "sender" && fields[1].text != "receiver") {
      rep.issue(lineno, fields[1].column, "role must be sender or receiver");
      continue;
    }
    if (fields[2].text.empty()) {
      rep.issue(lineno, fields[2].column, "empty name");
      continue;
    }
    auto [it, fresh] = group_of.emplace(fields[0].text, groups.size());
    if (fresh) groups.push_back({lineno, {}, {}});
    auto& g = groups[it->second];
    (fields[1].text == "sender" ? g.senders : g.receivers).push_back(std::move(fields[2].text));
  }
  for (const auto& g : groups) {
    if (g.senders.empty() || g.receivers.empty()) {
      rep.issue(g.line, 1, g.senders.empty() ? "interaction has no sender rows"
                                             : "interaction has no receiver rows");
      continue;
    }
    out.log.append_named(g.senders, g.receivers);
  }
  if (!comments.empty()) out.header = json{{"comments", comments}};
}

}  // namespace

IngestResult read_log(std::istream& in, LogFormat format, bool strict, bool shared_population) {
  IngestResult out{InteractionLog(shared_population), {}, json::object()};
  Reporter rep(strict, out.skipped);
  if (format == LogFormat::Jsonl) {
    read_jsonl(in, out, rep);
  } else {
    read_csv(in, out, rep);
  }
  if (out.log.empty()) throw ParseError(0, 0, "file contains no interactions");
  return out;
}

IngestResult read_log_file(const fs::path& path, LogFormat format, bool strict,
                           bool shared_population) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_log(in, format, strict, shared_population);
}

std::string version_string() { return "hvcm 0.1.0"; }

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw Error("not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string comment_header(const FileHeader& header) {
  std::ostringstream os;
  os << "# " << version_string() << '\n';
  os << "# kind=" << header.kind << '\n';
  os << "# seed=" << header.seed << '\n';
  os << "# config_hash=" << hex64(header.config_hash) << '\n';
  for (const auto& [k, v] : header.extra) os << "# " << k << '=' << v << '\n';
  return os.str();
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string serialize_log(const InteractionLog& log, LogFormat format, const FileHeader& header) {
  std::ostringstream os;
  if (format == LogFormat::Jsonl) {
    json h = {{"version", version_string()},
              {"kind", header.kind},
              {"seed", header.seed},
              {"config_hash", hex64(header.config_hash)}};
    for (const auto& [k, v] : header.extra) h[k] = v;
    os << json{{"hvcm_header", h}}.dump() << '\n';
    for (const auto& rec : log.records()) {
      json s = json::array();
      json r = json::array();
      for (auto id : rec.senders) s.push_back(log.sender_name(id));
      for (auto id : rec.receivers) r.push_back(log.receiver_name(id));
      os << json{{"senders", s}, {"receivers", r}}.dump() << '\n';
    }
  } else {
    os << comment_header(header);
    os << "interaction_id,role,name\n";
    for (std::size_t n = 0; n < log.size(); ++n) {
      for (auto id : log[n].senders) {
        os << n + 1 << ",sender," << csv_quote(log.sender_name(id)) << '\n';
      }
      for (auto id : log[n].receivers) {
        os << n + 1 << ",receiver," << csv_quote(log.receiver_name(id)) << '\n';
      }
    }
  }
  return os.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename into '" + path.string() + "': " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

json py_to_json(const PitmanYor& py) {
  return {{"alpha", format_double(py.discount)}, {"theta", format_double(py.concentration)}};
}

double real_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_double(j.get<std::string>());
  throw Error("parameters: expected a number or decimal string");
}

PitmanYor py_from_json(const json& j, PitmanYor fallback) {
  if (j.contains("alpha")) fallback.discount = real_from_json(j.at("alpha"));
  if (j.contains("theta")) fallback.concentration = real_from_json(j.at("theta"));
  return fallback;
}

json categorical_to_json(const Categorical& c) {
  json a = json::array();
  for (double p : c.probs) a.push_back(format_double(p));
  return a;
}

Categorical categorical_from_json(const json& j) {
  Categorical c;
  c.probs.clear();
  for (const auto& p : j) c.probs.push_back(real_from_json(p));
  return c;
}

std::string sender_key(SenderId s, const InteractionLog* log) {
  return log ? log->sender_name(s) : std::to_string(index(s));
}

SenderId sender_from_key(const std::string& key, const InteractionLog* log) {
  if (log) {
    auto id = log->sender_vocab().find(key);
    if (!id) throw Error("parameters: unknown sender '" + key + "'");
    return sender_id(*id);
  }
  return sender_id(static_cast<std::uint32_t>(std::stoul(key)));
}

}  // namespace

json params_to_json(const HvcmParams& params, const InteractionLog* log) {
  json local = json::object();
  for (const auto& [s, py] : params.local) local[sender_key(s, log)] = py_to_json(py);
  json sizes = json::object();
  for (const auto& [s, c] : params.receiver_size) sizes[sender_key(s, log)] = categorical_to_json(c);
  return {{"sender", py_to_json(params.sender)},
          {"global", py_to_json(params.global)},
          {"default_local", py_to_json(params.default_local)},
          {"local", local},
          {"z", py_to_json(params.z)},
          {"sender_size", categorical_to_json(params.sender_size)},
          {"receiver_size", categorical_to_json(params.default_receiver_size)},
          {"receiver_size_by_sender", sizes}};
}

HvcmParams params_from_json(const json& j, const InteractionLog* log) {
  HvcmParams p;
  if (j.contains("sender")) p.sender = py_from_json(j.at("sender"), p.sender);
  if (j.contains("global")) p.global = py_from_json(j.at("global"), p.global);
  if (j.contains("default_local")) p.default_local = py_from_json(j.at("default_local"), p.default_local);
  if (j.contains("local")) {
    for (const auto& [key, v] : j.at("local").items()) {
      p.local[sender_from_key(key, log)] = py_from_json(v, p.default_local);
    }
  }
  p.z = j.contains("z") ? py_from_json(j.at("z"), p.z) : p.sender;
  if (j.contains("sender_size")) p.sender_size = categorical_from_json(j.at("sender_size"));
  if (j.contains("receiver_size")) {
    p.default_receiver_size = categorical_from_json(j.at("receiver_size"));
  }
  if (j.contains("receiver_size_by_sender")) {
    for (const auto& [key, v] : j.at("receiver_size_by_sender").items()) {
      p.receiver_size[sender_from_key(key, log)] = categorical_from_json(v);
    }
  }
  p.validate();
  return p;
}

namespace {

std::string join_probs(const Categorical& c) {
  std::string out;
  for (std::size_t i = 0; i < c.probs.size(); ++i) {
    if (i) out.push_back(' ');
    out += format_double(c.probs[i]);
  }
  return out;
}

Categorical split_probs(const std::string& s) {
  Categorical c;
  c.probs.clear();
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) c.probs.push_back(parse_double(tok));
  return c;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

// Reads a '#'-headed TSV: comment key=value pairs, then a column row, then data.
struct Table {
  std::map<std::string, std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(const fs::path& path) {
  std::istringstream in(read_file(path));
  Table t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        t.meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      }
      continue;
    }
    auto fields = split_tabs(line);
    if (t.columns.empty()) {
      t.columns = std::move(fields);
    } else {
      if (fields.size() != t.columns.size()) {
        throw Error("'" + path.string() + "': row has " + std::to_string(fields.size()) +
                    " fields, expected " + std::to_string(t.columns.size()));
      }
      t.rows.push_back(std::move(fields));
    }
  }
  return t;
}

const std::string& meta_at(const Table& t, const std::string& key, const fs::path& path) {
  auto it = t.meta.find(key);
  if (it == t.meta.end()) throw Error("'" + path.string() + "': missing header " + key);
  return it->second;
}

fs::path with_suffix(const fs::path& prefix, const char* suffix) {
  fs::path p = prefix;
  p += suffix;
  return p;
}

}  // namespace

void write_trace(const fs::path& prefix, const GibbsTrace& trace, const InteractionLog& log,
                 const FileHeader& header) {
  FileHeader h = header;
  h.extra.emplace_back("burn_in", std::to_string(trace.burn_in));
  h.extra.emplace_back("iterations", std::to_string(trace.size()));
  h.extra.emplace_back("z_alpha", format_double(trace.z.discount));
  h.extra.emplace_back("z_theta", format_double(trace.z.concentration));
  h.extra.emplace_back("sender_size", join_probs(trace.sender_size));
  h.extra.emplace_back("receiver_size", join_probs(trace.receiver_size));

  std::ostringstream main;
  main << comment_header(h);
  main << "iteration\ttheta\talpha\tsender_theta\tsender_alpha\tlog_likelihood\tlabels\ttables\n";
  for (const auto& r : trace.records) {
    main << r.iteration << '\t' << format_double(r.global.concentration) << '\t'
         << format_double(r.global.discount) << '\t' << format_double(r.sender.concentration)
         << '\t' << format_double(r.sender.discount) << '\t' << format_double(r.log_likelihood)
         << '\t' << r.labels << '\t' << r.tables << '\n';
  }
  write_file_atomic(prefix, main.str());

  std::ostringstream local;
  FileHeader lh = header;
  lh.kind += ".local";
  local << comment_header(lh);
  local << "iteration\tsender_id\ttheta_s\talpha_s\n";
  for (std::size_t t = 0; t < trace.local.size(); ++t) {
    for (std::uint32_t s = 0; s < trace.local[t].size(); ++s) {
      const auto& py = trace.local[t][s];
      local << trace.records[t].iteration << '\t' << log.sender_name(sender_id(s)) << '\t'
            << format_double(py.concentration) << '\t' << format_double(py.discount) << '\n';
    }
  }
  write_file_atomic(with_suffix(prefix, ".local.tsv"), local.str());

  std::ostringstream z;
  FileHeader zh = header;
  zh.kind += ".z";
  z << comment_header(zh);
  z << "interaction\tsender\tposterior_mean\n";
  for (std::size_t k = 0; k < trace.multi_sender.size(); ++k) {
    for (std::size_t c = 0; c < trace.z_candidates[k].size(); ++c) {
      z << trace.multi_sender[k] + 1 << '\t' << log.sender_name(trace.z_candidates[k][c]) << '\t'
        << format_double(trace.z_posterior_mean[k][c]) << '\n';
    }
  }
  write_file_atomic(with_suffix(prefix, ".z.tsv"), z.str());
}

GibbsTrace read_trace(const fs::path& prefix, const InteractionLog& log) {
  GibbsTrace trace;
  const auto main = read_table(prefix);
  trace.seed = std::stoull(meta_at(main, "seed", prefix));
  trace.burn_in = std::stoull(meta_at(main, "burn_in", prefix));
  trace.z = {parse_double(meta_at(main, "z_alpha", prefix)),
             parse_double(meta_at(main, "z_theta", prefix))};
  trace.sender_size = split_probs(meta_at(main, "sender_size", prefix));
  trace.receiver_size = split_probs(meta_at(main, "receiver_size", prefix));
  std::map<std::size_t, std::size_t> row_of;
  for (const auto& row : main.rows) {
    TraceRecord r;
    r.iteration = std::stoull(row.at(0));
    r.global = {parse_double(row.at(2)), parse_double(row.at(1))};
    r.sender = {parse_double(row.at(4)), parse_double(row.at(3))};
    r.log_likelihood = parse_double(row.at(5));
    r.labels = std::stoull(row.at(6));
    r.tables = std::stoull(row.at(7));
    row_of[r.iteration] = trace.records.size();
    trace.records.push_back(r);
  }
  trace.local.assign(trace.records.size(), std::vector<PitmanYor>(log.num_sender_ids()));
  const auto local_path = with_suffix(prefix, ".local.tsv");
  for (const auto& row : read_table(local_path).rows) {
    auto it = row_of.find(std::stoull(row.at(0)));
    auto s = log.sender_vocab().find(row.at(1));
    if (it == row_of.end() || !s) {
      throw Error("'" + local_path.string() + "': row does not match the trace or the log");
    }
    trace.local[it->second][*s] = {parse_double(row.at(3)), parse_double(row.at(2))};
  }
  for (std::size_t n = 0; n < log.size(); ++n) {
    auto cand = log[n].distinct_senders();
    if (cand.size() < 2) continue;
    trace.multi_sender.push_back(n);
    trace.z_posterior_mean.emplace_back(cand.size(), 0.0);
    trace.z_candidates.push_back(std::move(cand));
  }
  const auto z_path = with_suffix(prefix, ".z.tsv");
  if (fs::exists(z_path)) {
    std::map<std::size_t, std::size_t> k_of;
    for (std::size_t k = 0; k < trace.multi_sender.size(); ++k) k_of[trace.multi_sender[k] + 1] = k;
    for (const auto& row : read_table(z_path).rows) {
      auto it = k_of.find(std::stoull(row.at(0)));
      auto s = log.sender_vocab().find(row.at(1));
      if (it == k_of.end() || !s) {
        throw Error("'" + z_path.string() + "': row does not match the log");
      }
      const auto& cand = trace.z_candidates[it->second];
      const auto pos = std::find(cand.begin(), cand.end(), sender_id(*s));
      if (pos == cand.end()) throw Error("'" + z_path.string() + "': sender not listed");
      trace.z_posterior_mean[it->second][static_cast<std::size_t>(pos - cand.begin())] =
          parse_double(row.at(2));
    }
  }
  return trace;
}

}  // namespace hvcm
