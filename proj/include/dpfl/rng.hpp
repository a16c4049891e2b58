#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace dpfl {

// Stream labels for deriving independent generators from one master seed.
// Streams keyed by (label, device, round) never overlap, and none of them
// depends on the scheme being simulated, which is what keeps paired
// proposed/benchmark runs on identical data and channel draws.
enum class StreamLabel : std::uint64_t {
  kGroundTruth = 1,
  kDataGen = 2,
  kChannel = 3,
  kLocalNoise = 4,
  kGlobalNoise = 5,
};

std::uint64_t derive_seed(std::uint64_t master, StreamLabel label,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// Seedable generator with fully specified output. mt19937_64 is pinned by
// the standard, and the uniform/gaussian transforms below are written out
// explicitly instead of going through std distributions (whose algorithms
// are implementation-defined), so replays are bit-identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  Rng(std::uint64_t master, StreamLabel label, std::uint64_t a = 0,
      std::uint64_t b = 0)
      : engine_(derive_seed(master, label, a, b)) {}

  // Uniform on the open interval (0, 1).
  double uniform();

  // Uniform on [lo, hi).
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller.
  double gaussian();

  // Exponential with the given mean.
  double exponential(double mean);

  Eigen::VectorXd gaussian_vector(Eigen::Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dpfl
