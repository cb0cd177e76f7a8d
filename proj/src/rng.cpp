#include "mmsur/rng.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <cmath>

#include "mmsur/errors.hpp"

namespace mmsur {

double RandomStream::uniform() {
  // 53-bit mantissa, shifted to the open interval
  return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double RandomStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw ContractError("gamma draw requires positive shape and rate");
  boost::math::gamma_distribution<double> d(shape, 1.0 / rate);
  return boost::math::quantile(d, uniform());
}

std::uint64_t RandomStream::derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 over the combined value
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mmsur
