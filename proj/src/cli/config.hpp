#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "ensrf/bounds.hpp"
#include "ensrf/convergence.hpp"
#include "ensrf/ensemble.hpp"

namespace ensrf::cli {

using Json = nlohmann::json;

/// A parsed configuration file together with its canonical form.
struct LoadedConfig {
  std::string path;
  Json doc;
  std::string canonical;  // sorted keys, no whitespace
  std::string hash;       // hex SHA-256 of `canonical`
};

/// Reads and parses a JSON config. Missing or malformed files throw
/// ConfigError.
LoadedConfig load_config(const std::string& path);

std::string canonicalize(const Json& doc);
std::string sha256_hex(const std::string& text);

/// Master seed: the --seed flag if given, else the "seed" key, else 0.
std::uint64_t master_seed(const Json& doc, std::optional<std::uint64_t> flag);

/// Either an explicit "problem" block or a "synthetic" recipe.
FilteringProblem parse_problem(const Json& doc, std::uint64_t seed);

struct EnsembleSettings {
  Index size = 0;
  InitMode init = InitMode::Sample;
};

EnsembleSettings parse_ensemble(const Json& doc, Index state_dim);

ExperimentConfig parse_experiment(const Json& doc, FilteringProblem problem, std::uint64_t seed,
                                  int threads);

/// Fuzz options from an optional "fuzz" block; flags are applied by the caller.
FuzzOptions parse_fuzz(const Json& doc, std::uint64_t seed);

Matrix parse_matrix(const Json& j, const std::string& where);
Vector parse_vector(const Json& j, const std::string& where);

}  // namespace ensrf::cli
