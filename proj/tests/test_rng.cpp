#include <catch2/catch_amalgamated.hpp>

#include "bt/rng.hpp"

#include <set>
#include <vector>

TEST_CASE("philox4x32-10 matches the reference known-answer vectors", "[rng]") {
  // Random123 kat_vectors, philox4x32-10 rows.
  const auto zero = bt::philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(zero == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

  const auto ones = bt::philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                   {0xffffffffu, 0xffffffffu});
  CHECK(ones == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});

  const auto pi = bt::philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                 {0xa4093822u, 0x299f31d0u});
  CHECK(pi == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and keyed by (seed, id)", "[rng]") {
  bt::Stream a(42, 7), b(42, 7);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  bt::Stream c(42, 8), d(43, 7);
  bt::Stream base(42, 7);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 16; ++i) {
    const auto x = base.next_u64();
    differs_c |= x != c.next_u64();
    differs_d |= x != d.next_u64();
  }
  CHECK(differs_c);
  CHECK(differs_d);
}

TEST_CASE("doubles fall strictly inside (0,1) and look uniform", "[rng]") {
  bt::Stream s(1234, 0);
  double sum = 0;
  constexpr int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.next_double();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // mean of n uniforms: sd = 1/sqrt(12 n), allow 4 sigma
  CHECK(std::abs(sum / n - 0.5) < 4.0 / std::sqrt(12.0 * n));
}
