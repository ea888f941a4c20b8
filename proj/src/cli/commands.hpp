#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace ensrf::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitViolations = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
};

struct CommonOptions {
  std::string config;
  std::filesystem::path out = ".";
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

struct FuzzFlags {
  std::optional<long> n;
  std::optional<long> m;
  std::optional<std::size_t> trials;
  std::optional<double> max_condition;
  std::optional<double> violation_tol;
  std::optional<std::string> corrupt;  // test hook
};

/// Each command writes its outputs under opts.out, prints diagnostics to
/// stderr and returns an ExitCode; exceptions do not escape.
int cmd_kf_run(const CommonOptions& opts);
int cmd_srf_run(const CommonOptions& opts, bool dump_ensemble);
int cmd_converge(const CommonOptions& opts);
int cmd_bounds_fuzz(const CommonOptions& opts, const FuzzFlags& flags);

}  // namespace ensrf::cli
