#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace kkindex {

// 64-bit linear congruential generator, x' = a x + c mod 2^64 with
// a = 6364136223846793005 and c = 1442695040888963407. Doubles take the top
// 53 bits: u = (x >> 11) * 2^-53, so every language reproduces the stream.
class SeededRng {
 public:
  using Engine = std::linear_congruential_engine<std::uint64_t, 6364136223846793005ULL, 1442695040888963407ULL, 0ULL>;

  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  // Uniform on [-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }
  std::complex<double> complex() {
    double re = symmetric();
    double im = symmetric();
    return {re, im};
  }

 private:
  Engine engine_;
};

}  // namespace kkindex
