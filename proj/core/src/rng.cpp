#include "aoidrift/rng.hpp"

namespace aoidrift {

DriftSampler::DriftSampler(const DriftModel& model) {
  for (const auto& [value, p] : drift_pmf(model)) {
    values_.push_back(value);
    cumulative_.push_back((cumulative_.empty() ? 0.0 : cumulative_.back()) + p);
  }
}

int DriftSampler::sample(RngStream& rng) const {
  const double u = rng.next_double();
  for (std::size_t i = 0; i < cumulative_.size(); ++i) {
    if (u < cumulative_[i]) return values_[i];
  }
  // u landed at or above the accumulated total (possible only through
  // floating-point shortfall of the final sum): take the last category.
  return values_.back();
}

int sample_drift(const DriftModel& model, RngStream& rng) {
  // Same accumulation order as DriftSampler, so the two agree bit-for-bit.
  const double u = rng.next_double();
  double cumulative = 0.0;
  int last = 0;
  for (const auto& [value, p] : drift_pmf(model)) {
    cumulative += p;
    last = value;
    if (u < cumulative) return value;
  }
  return last;
}

}  // namespace aoidrift
