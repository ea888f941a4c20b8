#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ensrf/linalg.hpp"

namespace ensrf::cli {

/// Shortest decimal that parses back to exactly `x`.
std::string format_double(double x);

/// Comma-separated writer with LF line endings.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void header(const std::vector<std::string>& columns);
  CsvWriter& field(std::string_view text);
  CsvWriter& field(double x);
  CsvWriter& field(std::uint64_t x);
  void end_row();
  void close();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  bool first_ = true;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// UTC timestamp, ISO 8601 with seconds.
std::string utc_now();

struct RunManifest {
  std::string tool_version;
  std::string command;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  int threads = 1;
  std::string started_at;
  std::string finished_at;
  double elapsed_seconds = 0.0;
  std::vector<std::string> output_paths;

  nlohmann::json to_json() const;
};

std::vector<std::string> state_columns(Index n);

}  // namespace ensrf::cli
