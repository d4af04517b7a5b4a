#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>

#include <openssl/rand.h>

#include "ringveil/error.hpp"

namespace ringveil {

// Every randomized operation takes a caller-supplied generator producing full
// 64-bit words. Only raw words are consumed (no std distributions), so seeded
// runs are bit-identical across standard library implementations.
template <class G>
concept Rng64 = std::uniform_random_bit_generator<G> &&
    std::same_as<typename G::result_type, std::uint64_t> &&
    G::min() == 0 && G::max() == std::numeric_limits<std::uint64_t>::max();

// Deterministic generator for simulation and tests.
using SimRng = std::mt19937_64;

// Operating-system entropy via OpenSSL.
class SystemRng {
 public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    result_type v = 0;
    if (RAND_bytes(reinterpret_cast<unsigned char*>(&v), sizeof v) != 1)
      throw Error(Errc::InvalidArgument, "RAND_bytes failed");
    return v;
  }
};

template <Rng64 G>
void fill_random(G& rng, std::uint8_t* out, std::size_t len) {
  while (len > 0) {
    std::uint64_t w = rng();
    for (int i = 0; i < 8 && len > 0; ++i, --len) {
      *out++ = static_cast<std::uint8_t>(w);
      w >>= 8;
    }
  }
}

// Uniform integer in [0, bound) by rejection.
template <Rng64 G>
std::uint64_t uniform_index(G& rng, std::uint64_t bound) {
  if (bound == 0) throw Error(Errc::InvalidArgument, "uniform_index: empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    std::uint64_t w = rng();
    if (w < limit) return w % bound;
  }
}

// Bernoulli draw with probability p, 53-bit resolution.
template <Rng64 G>
bool bernoulli(G& rng, double p) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return u < p;
}

}  // namespace ringveil
