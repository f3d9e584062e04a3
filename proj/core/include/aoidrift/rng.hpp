#pragma once

#include <cstdint>
#include <vector>

#include "aoidrift/model.hpp"

namespace aoidrift {

// Deterministic 64-bit generator: a Weyl counter stepped by 0x9E3779B97F4A7C15
// with a two-round avalanche mix (splitmix64). Full period 2^64 over the
// counter; identical seeds give bit-identical sequences on every platform.
// One stream owns one run; sweeps derive per-row streams from the base seed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) using the top 53 bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
  std::uint64_t seed_;
};

// One draw from drift_pmf(model) by inverse CDF over the fixed category order
// (most negative offset first). Consumes exactly one draw per call, point
// masses included, so seeded slot traces stay aligned across models.
int sample_drift(const DriftModel& model, RngStream& rng);

// Precomputed inverse-CDF table for hot loops. Sampling behaviour is
// bit-identical to sample_drift: the cumulative sums are accumulated in the
// same category order.
class DriftSampler {
 public:
  explicit DriftSampler(const DriftModel& model);
  int sample(RngStream& rng) const;

 private:
  std::vector<int> values_;
  std::vector<double> cumulative_;
};

}  // namespace aoidrift
