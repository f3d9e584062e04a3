#pragma once

#include <map>
#include <string>
#include <variant>

#include "aoidrift/errors.hpp"

namespace aoidrift {

// Per-slot Bernoulli erasure channel: an update sent in a slot is decoded at
// the receiver with probability success_prob, independently across slots.
struct Channel {
  double success_prob = 1.0;
  double failure_prob() const { return 1.0 - success_prob; }
};

// Receiver clock offset models, in whole slots relative to the transmitter
// clock. The offset is redrawn independently every slot.

// Constant offset of `drift` slots (drift >= 0).
struct Deterministic {
  long drift = 0;
};

// Offset k in {0, 1, ..., max_drift}: each nonzero value has probability
// p_each, zero takes the remainder.
struct CategoricalPositive {
  int max_drift = 1;
  double p_each = 0.0;
  double p_zero() const { return 1.0 - static_cast<double>(max_drift) * p_each; }
};

// Offset in {-1, 0, +1}; the three probabilities must sum to one.
struct Ternary {
  double p_down = 0.0;
  double p_zero = 1.0;
  double p_up = 0.0;
};

using DriftModel = std::variant<Deterministic, CategoricalPositive, Ternary>;

// Slack applied to every probability feasibility check.
inline constexpr double kProbTolerance = 1e-12;

struct ValidationResult {
  bool ok = false;
  Errc code = Errc::ok;   // violated constraint when !ok
  std::string message;    // names the constraint and the offending values
};

ValidationResult validate(const Channel& ch);
ValidationResult validate(const DriftModel& model);

// Throwing forms used at the entry of every operation consuming a model.
// validate(model).ok is equivalent to "every downstream operation accepts".
void require_valid(const Channel& ch);
void require_valid(const DriftModel& model);

// Analyses that produce a finite mean additionally need success_prob > 0.
void require_positive_success(const Channel& ch);

// Exact per-slot offset distribution, keyed by offset value in ascending
// order. Entries with zero probability are kept so the support is explicit.
std::map<int, double> drift_pmf(const DriftModel& model);

// Expected offset per slot, in closed form.
double mean_drift(const DriftModel& model);

// Short tag like "positive(K=4,p=0.1)" for diagnostics and CSV output.
std::string describe(const DriftModel& model);

}  // namespace aoidrift
