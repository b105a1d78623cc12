#pragma once

#include <array>
#include <cstdint>

namespace icmpr {

// xoshiro256++ with splitmix64 seeding. Self-contained so that seeded runs
// are byte-identical across platforms and standard libraries, which the
// simulation harness and CLI promise.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream derived from (seed, stream index); replicate results
  // do not depend on scheduling order.
  Rng fork(std::uint64_t stream) const;

  std::uint64_t next_u64();
  double uniform();                      // (0, 1)
  double uniform(double a, double b);    // (a, b)
  double normal(double mean, double sd); // Box-Muller
  double exponential(double rate);
  double gamma(double shape);            // unit scale, Marsaglia-Tsang
  double gamma_rate(double shape, double rate);

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
};

}  // namespace icmpr
