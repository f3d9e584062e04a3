#pragma once

#include <algorithm>
#include <utility>
#include <vector>

namespace aoidrift {

// base^exp for integer exp >= 0 by repeated squaring, with 0^0 == 1.
// Deterministic across platforms, unlike std::pow.
inline double ipow(double base, long exp) {
  double result = 1.0;
  double b = base;
  for (long e = exp; e > 0; e >>= 1) {
    if (e & 1) result *= b;
    b *= b;
  }
  return result;
}

// A measure on the integers >= 1 written as explicit head entries plus
// shifted geometric terms sharing one ratio r in [0, 1):
//
//   prob(i) = sum of head values at index i
//           + sum over terms of coeff * r^(i - start) for i >= start.
//
// Stationary AoI laws in this library are all of this shape, so tail masses
// and tail first moments come out in closed form and truncation never costs
// accuracy:
//   sum_{i >= m} c r^(i-s)        = c r^(m-s) / (1-r)
//   sum_{i >= m} i c r^(i-s)      = c r^(m-s) [m/(1-r) + r/(1-r)^2]
class GeometricMix {
 public:
  explicit GeometricMix(double ratio) : ratio_(ratio) {}

  void add_head(long index, double value) {
    for (auto& [i, v] : heads_) {
      if (i == index) {
        v += value;
        return;
      }
    }
    heads_.emplace_back(index, value);
  }

  void add_term(long start, double coeff) { terms_.push_back({start, coeff}); }

  double ratio() const { return ratio_; }

  double prob(long i) const {
    double p = 0.0;
    for (const auto& [index, value] : heads_) {
      if (index == i) p += value;
    }
    for (const auto& t : terms_) {
      if (i >= t.start) p += t.coeff * ipow(ratio_, i - t.start);
    }
    return p;
  }

  // sum_{i > index} prob(i)
  double mass_above(long index) const {
    double s = 0.0;
    for (const auto& [i, value] : heads_) {
      if (i > index) s += value;
    }
    const double q = 1.0 - ratio_;
    for (const auto& t : terms_) {
      const long m = std::max(index + 1, t.start);
      s += t.coeff * ipow(ratio_, m - t.start) / q;
    }
    return s;
  }

  // sum_{i > index} i * prob(i)
  double first_moment_above(long index) const {
    double s = 0.0;
    for (const auto& [i, value] : heads_) {
      if (i > index) s += static_cast<double>(i) * value;
    }
    const double r = ratio_;
    const double q = 1.0 - r;
    for (const auto& t : terms_) {
      const long m = std::max(index + 1, t.start);
      s += t.coeff * ipow(r, m - t.start) *
           (static_cast<double>(m) / q + r / (q * q));
    }
    return s;
  }

  double total_mass() const { return mass_above(0); }
  double mean() const { return first_moment_above(0); }

 private:
  struct Term {
    long start;
    double coeff;
  };
  std::vector<std::pair<long, double>> heads_;
  std::vector<Term> terms_;
  double ratio_;
};

}  // namespace aoidrift
