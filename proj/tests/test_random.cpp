#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "ensrf/random.hpp"

using namespace ensrf;

// Known-answer vectors of the Random123 reference implementation; the last one
// was cross-checked against TensorFlow's Philox kernel.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(Philox4x32::encrypt({0, 0, 0, 0}, {0, 0}),
            (Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::encrypt({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                {0xffffffffu, 0xffffffffu}),
            (Philox4x32::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::encrypt({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                {0xa4093822u, 0x299f31d0u}),
            (Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
  Philox4x32 a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::vector<std::uint32_t> va, vb, vc, vd;
  for (int i = 0; i < 64; ++i) {
    va.push_back(a());
    vb.push_back(b());
    vc.push_back(c());
    vd.push_back(d());
  }
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  EXPECT_NE(va, vd);
}

TEST(Philox, NormalDrawsLookStandard) {
  Philox4x32 rng(1, 0);
  const Vector z = standard_normal(rng, 200000);
  EXPECT_NEAR(z.mean(), 0.0, 5.0 / std::sqrt(200000.0));
  const double var = (z.array() - z.mean()).square().mean();
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(DeriveSeed, DependsOnEveryPathElement) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t n : {16u, 64u, 256u})
    for (std::uint64_t r = 0; r < 100; ++r) seen.insert(derive_seed(9, {n, r}));
  EXPECT_EQ(seen.size(), 300u);
  EXPECT_EQ(derive_seed(9, {16, 3}), derive_seed(9, {16, 3}));
  EXPECT_NE(derive_seed(9, {16, 3}), derive_seed(9, {3, 16}));
}
