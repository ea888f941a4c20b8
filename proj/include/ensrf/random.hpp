#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

#include "ensrf/linalg.hpp"

namespace ensrf {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A stream is identified by (key, stream id); every output is a pure
/// function of (key, stream id, position), so independent streams can be
/// consumed from any thread in any order and still reproduce bit for bit.
/// Satisfies UniformRandomBitGenerator.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t key, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Ten-round bijection of one counter block under a key.
  static Block encrypt(Block counter, Key key);

 private:
  Key key_;
  Block counter_;
  Block buffer_{};
  int used_ = 4;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic child seed from a master seed and a path of indices, e.g.
/// derive_seed(master, {N, replicate}).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Length-n vector of independent standard normal draws.
Vector standard_normal(Philox4x32& rng, Index n);

/// rows x cols matrix of standard normal draws, filled column by column.
Matrix standard_normal(Philox4x32& rng, Index rows, Index cols);

/// Uniform draw on [lo, hi).
double uniform(Philox4x32& rng, double lo, double hi);

}  // namespace ensrf
