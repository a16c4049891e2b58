#include "dpfl/rng.hpp"

#include <cmath>

namespace dpfl {
namespace {

// splitmix64 finalizer (Steele, Lea, Flood 2014).
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, StreamLabel label,
                          std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = splitmix64(master);
  x = splitmix64(x ^ static_cast<std::uint64_t>(label));
  x = splitmix64(x ^ a);
  x = splitmix64(x ^ b);
  return x;
}

double Rng::uniform() {
  // 53-bit mantissa, shifted into (0, 1) so log() of either tail is safe.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double Rng::exponential(double mean) { return -mean * std::log(uniform()); }

Eigen::VectorXd Rng::gaussian_vector(Eigen::Index n) {
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = gaussian();
  return out;
}

}  // namespace dpfl
