#pragma once

#include <cstdint>
#include <random>

namespace cpes {

/// The single seeded random stream used for measurement noise.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double gaussian(double stddev) {
    if (stddev == 0.0) return 0.0;
    std::normal_distribution<double> dist(0.0, stddev);
    return dist(engine_);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cpes
