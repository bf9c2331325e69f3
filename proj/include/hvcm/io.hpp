#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hvcm/error.hpp"
#include "hvcm/inference.hpp"
#include "hvcm/interaction.hpp"
#include "hvcm/params.hpp"

namespace hvcm {

enum class LogFormat { Jsonl, Csv };

LogFormat parse_format(std::string_view name);
// jsonl unless the path ends in .csv.
LogFormat format_for_path(const std::filesystem::path& path);

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, std::string reason);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string reason_;
};

struct ParseIssue {
  std::size_t line = 0;
  std::size_t column = 0;
  std::string reason;
};

struct IngestResult {
  InteractionLog log;
  std::vector<ParseIssue> skipped;  // lenient mode only
  nlohmann::json header;            // the file's header object, if any
};

// JSON lines: {"senders": [...], "receivers": [...]} per line, optionally preceded by
// a {"hvcm_header": {...}} line. CSV: interaction_id,role,name rows, '#' comment
// lines, an optional column-name row. Strict mode throws ParseError at the first
// malformed line; lenient mode skips and itemizes it. A file without interactions
// is an error in both modes.
IngestResult read_log(std::istream& in, LogFormat format, bool strict = true,
                      bool shared_population = false);
IngestResult read_log_file(const std::filesystem::path& path, LogFormat format,
                           bool strict = true, bool shared_population = false);

// Header metadata written at the top of every emitted file.
struct FileHeader {
  std::string kind;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<std::pair<std::string, std::string>> extra;
};

std::string version_string();
// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

// Header as '#'-prefixed lines for delimited text.
std::string comment_header(const FileHeader& header);
std::string serialize_log(const InteractionLog& log, LogFormat format, const FileHeader& header);

// Writes through a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Model parameters as JSON, every real number stored as a decimal string.
nlohmann::json params_to_json(const HvcmParams& params, const InteractionLog* log = nullptr);
HvcmParams params_from_json(const nlohmann::json& j, const InteractionLog* log = nullptr);

// Trace files under a path prefix P: P (global parameters per iteration),
// P.local.tsv (iteration, sender, theta_s, alpha_s) and P.z.tsv (posterior-mean
// attribution probabilities of multi-sender interactions).
void write_trace(const std::filesystem::path& prefix, const GibbsTrace& trace,
                 const InteractionLog& log, const FileHeader& header);
GibbsTrace read_trace(const std::filesystem::path& prefix, const InteractionLog& log);

}  // namespace hvcm
