#pragma once

#include <cstdint>
#include <random>

namespace mmsur {

// Explicitly seeded stream; one per thread of execution, passed by reference.
// Every draw consumes a fixed number of engine outputs regardless of the
// parameter values, so fixing the seed yields common random numbers across
// nearby parameter settings.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  // uniform on the open interval (0,1)
  double uniform();
  // standard normal via Box-Muller (two uniforms per draw)
  double normal();
  // shape-rate Gamma via inverse CDF (one uniform per draw)
  double gamma(double shape, double rate);
  double chi_square(double dof) { return gamma(0.5 * dof, 0.5); }

  // Independent substream for a worker task (replicate, prediction draw).
  static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

 private:
  std::mt19937_64 gen_;
};

}  // namespace mmsur
