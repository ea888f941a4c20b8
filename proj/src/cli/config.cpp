#include "cli/config.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ensrf/errors.hpp"

namespace ensrf::cli {

namespace {

const Json* find(const Json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const Json& require(const Json& obj, const char* key, const std::string& where) {
  const Json* j = find(obj, key);
  if (!j) throw ConfigError(where + ": missing key \"" + key + "\"");
  return *j;
}

double as_double(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

std::uint64_t as_u64(const Json& j, const std::string& where) {
  if (!j.is_number_unsigned()) throw ConfigError(where + ": expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

Index as_index(const Json& j, const std::string& where) {
  return static_cast<Index>(as_u64(j, where));
}

template <class T, class F>
T get_or(const Json& obj, const char* key, T fallback, const std::string& where, F convert) {
  const Json* j = find(obj, key);
  return j ? convert(*j, where + "." + key) : fallback;
}

InitMode parse_init(const Json& obj, const std::string& where) {
  const Json* j = find(obj, "init");
  if (!j) return InitMode::Sample;
  if (!j->is_string()) throw ConfigError(where + ".init: expected a string");
  const auto name = j->get<std::string>();
  if (name == "sample") return InitMode::Sample;
  if (name == "exact_moment") return InitMode::ExactMoment;
  throw ConfigError(where + ".init: unknown mode \"" + name + "\" (sample, exact_moment)");
}

}  // namespace

LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream text;
  text << in.rdbuf();
  LoadedConfig cfg;
  cfg.path = path;
  try {
    cfg.doc = Json::parse(text.str());
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  if (!cfg.doc.is_object()) throw ConfigError("config file '" + path + "': top level must be an object");
  cfg.canonical = canonicalize(cfg.doc);
  cfg.hash = sha256_hex(cfg.canonical);
  return cfg;
}

std::string canonicalize(const Json& doc) { return doc.dump(); }

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::uint64_t master_seed(const Json& doc, std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  return get_or<std::uint64_t>(doc, "seed", 0, "config", as_u64);
}

Matrix parse_matrix(const Json& j, const std::string& where) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nonempty array of rows");
  const auto rows = static_cast<Index>(j.size());
  Index cols = -1;
  Matrix a;
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array()) throw ConfigError(where + ": row " + std::to_string(i) + " is not an array");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      a.resize(rows, cols);
    }
    if (static_cast<Index>(row.size()) != cols)
      throw ConfigError(where + ": ragged rows (row " + std::to_string(i) + ")");
    for (Index c = 0; c < cols; ++c)
      a(i, c) = as_double(row[static_cast<std::size_t>(c)], where);
  }
  return a;
}

Vector parse_vector(const Json& j, const std::string& where) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = as_double(j[i], where);
  return v;
}

FilteringProblem parse_problem(const Json& doc, std::uint64_t seed) {
  if (const Json* syn = find(doc, "synthetic")) {
    const std::string where = "synthetic";
    const Index n = as_index(require(*syn, "n", where), where + ".n");
    const Index m = as_index(require(*syn, "m", where), where + ".m");
    const auto steps = static_cast<std::size_t>(as_u64(require(*syn, "steps", where), where + ".steps"));
    const std::uint64_t problem_seed = get_or(*syn, "seed", seed, where, as_u64);
    return make_synthetic_problem(n, m, steps, problem_seed);
  }

  const Json* pj = find(doc, "problem");
  if (!pj) throw ConfigError("config: needs a \"problem\" or \"synthetic\" block");
  const std::string where = "problem";
  FilteringProblem p;
  p.background.mean = parse_vector(require(*pj, "mean", where), where + ".mean");
  const Index n = p.background.mean.size();
  if (n < 1) throw ConfigError("problem.mean: state dimension must be >= 1");
  if (const Json* f = find(*pj, "factor")) {
    p.background.factor = parse_matrix(*f, where + ".factor");
  } else {
    const Matrix cov = parse_matrix(require(*pj, "cov", where), where + ".cov");
    if (cov.rows() != n || cov.cols() != n)
      throw ConfigError("problem.cov: expected a " + std::to_string(n) + "x" + std::to_string(n) +
                        " matrix");
    p.background.factor = sym_sqrt(cov);
  }
  if (p.background.factor.rows() != n)
    throw ConfigError("problem.factor: row count must equal the state dimension");

  const Json& steps = require(*pj, "steps", where);
  if (!steps.is_array()) throw ConfigError("problem.steps: expected an array");
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const std::string at = where + ".steps[" + std::to_string(k) + "]";
    const Json& s = steps[k];
    LinearModelStep model;
    model.M = parse_matrix(require(s, "M", at), at + ".M");
    const Json* b = find(s, "b");
    model.b = b ? parse_vector(*b, at + ".b") : Vector(Vector::Zero(n));
    ObservationSpec obs;
    obs.H = parse_matrix(require(s, "H", at), at + ".H");
    obs.R = parse_matrix(require(s, "R", at), at + ".R");
    obs.d = parse_vector(require(s, "d", at), at + ".d");
    try {
      model.validate(n);
      obs.validate(n);
    } catch (const Error& e) {
      throw ConfigError(at + ": " + e.what());
    }
    p.models.push_back(std::move(model));
    p.observations.push_back(std::move(obs));
  }
  return p;
}

EnsembleSettings parse_ensemble(const Json& doc, Index state_dim) {
  const Json* ej = find(doc, "ensemble");
  if (!ej) throw ConfigError("config: srf-run needs an \"ensemble\" block");
  EnsembleSettings s;
  s.init = parse_init(*ej, "ensemble");
  const Index fallback = s.init == InitMode::ExactMoment ? 2 * state_dim : 0;
  s.size = get_or(*ej, "size", fallback, "ensemble", as_index);
  if (s.size < 2) throw ConfigError("ensemble.size: must be >= 2");
  if (s.init == InitMode::ExactMoment && s.size % (2 * state_dim) != 0)
    throw ConfigError("ensemble.size: exact_moment needs a multiple of 2n = " +
                      std::to_string(2 * state_dim));
  return s;
}

ExperimentConfig parse_experiment(const Json& doc, FilteringProblem problem, std::uint64_t seed,
                                  int threads) {
  const Json* xj = find(doc, "experiment");
  if (!xj) throw ConfigError("config: converge needs an \"experiment\" block");
  const std::string where = "experiment";
  ExperimentConfig cfg;
  cfg.problem = std::move(problem);
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.init = parse_init(*xj, where);

  const Json& sizes = require(*xj, "ensemble_sizes", where);
  if (!sizes.is_array()) throw ConfigError("experiment.ensemble_sizes: expected an array");
  for (const Json& s : sizes) cfg.ensemble_sizes.push_back(as_index(s, "experiment.ensemble_sizes"));
  cfg.replicates = get_or<std::size_t>(*xj, "replicates", cfg.replicates, where, as_u64);
  if (const Json* ps = find(*xj, "p")) {
    cfg.p_values.clear();
    if (ps->is_number()) {
      cfg.p_values.push_back(ps->get<double>());
    } else if (ps->is_array()) {
      for (const Json& p : *ps) cfg.p_values.push_back(as_double(p, "experiment.p"));
    } else {
      throw ConfigError("experiment.p: expected a number or an array");
    }
  }
  cfg.max_failure_fraction =
      get_or(*xj, "max_failure_fraction", cfg.max_failure_fraction, where, as_double);
  cfg.validate();
  return cfg;
}

FuzzOptions parse_fuzz(const Json& doc, std::uint64_t seed) {
  FuzzOptions opt;
  opt.seed = seed;
  const Json* fj = find(doc, "fuzz");
  if (!fj) return opt;
  const std::string where = "fuzz";
  opt.n = get_or(*fj, "n", opt.n, where, as_index);
  opt.m = get_or(*fj, "m", opt.m, where, as_index);
  opt.trials = get_or<std::size_t>(*fj, "trials", opt.trials, where, as_u64);
  opt.max_condition = get_or(*fj, "max_condition", opt.max_condition, where, as_double);
  opt.violation_tol = get_or(*fj, "violation_tol", opt.violation_tol, where, as_double);
  return opt;
}

}  // namespace ensrf::cli
