#include "cli/output.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>

#include "ensrf/errors.hpp"

namespace ensrf::cli {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
  if (!out_) throw ConfigError("cannot write '" + path.string() + "'");
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (const auto& c : columns) field(c);
  end_row();
}

CsvWriter& CsvWriter::field(std::string_view text) {
  if (!first_) out_ << ',';
  out_ << text;
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::field(double x) { return field(std::string_view(format_double(x))); }

CsvWriter& CsvWriter::field(std::uint64_t x) { return field(std::string_view(std::to_string(x))); }

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw ConfigError("failed writing '" + path_.string() + "'");
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  return {{"toolVersion", tool_version},   {"command", command},
          {"configHash", config_hash},     {"masterSeed", master_seed},
          {"threads", threads},            {"startedAt", started_at},
          {"finishedAt", finished_at},     {"elapsedSeconds", elapsed_seconds},
          {"outputPaths", output_paths}};
}

std::vector<std::string> state_columns(Index n) {
  std::vector<std::string> cols = {"step", "stage"};
  for (Index i = 0; i < n; ++i) cols.push_back("mean_" + std::to_string(i));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) cols.push_back("cov_" + std::to_string(i) + "_" + std::to_string(j));
  return cols;
}

}  // namespace ensrf::cli
