#include "qspde/rng.hpp"

#include <cmath>

namespace qspde::rng {

double standard_normal(std::uint64_t k) {
  const double u1 = uniform_open(mix64(k));
  const double u2 = uniform_open(mix64(k ^ 0xd1b54a32d192ed03ULL));
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace qspde::rng
