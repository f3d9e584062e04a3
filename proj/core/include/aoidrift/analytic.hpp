#pragma once

#include <optional>
#include <vector>

#include "aoidrift/geometric.hpp"
#include "aoidrift/model.hpp"

namespace aoidrift {

// Ages are truncated (for enumeration only) at the smallest i with
// failure_prob^i below this threshold, capped at kTruncationCap.
inline constexpr double kTailThreshold = 1e-12;
inline constexpr long kTruncationCap = 10'000;

long default_truncation_index(const Channel& ch);

// Stationary AoI distribution on {1, 2, ...}. Closed-form instances keep the
// exact law for every age plus analytic tails beyond the enumerated prefix;
// enumerated instances (e.g. a chain marginal) carry only a truncated table,
// with zero residual by construction.
class AoiPmf {
 public:
  static AoiPmf from_closed_form(GeometricMix mix, long i_max);
  static AoiPmf from_enumerated(std::vector<double> probs);  // probs[0] = prob(1)

  double prob(long i) const;                      // any i >= 1
  const std::vector<double>& prefix() const { return prefix_; }
  long truncation_index() const { return i_max_; }
  double residual() const { return residual_; }   // analytic mass above i_max
  double mass_above(long index) const;
  double prefix_mass() const;
  double total_mass() const { return prefix_mass() + residual_; }
  double mean() const;                            // prefix moment + analytic tail moment

 private:
  AoiPmf() = default;
  std::optional<GeometricMix> mix_;
  std::vector<double> prefix_;
  long i_max_ = 0;
  double residual_ = 0.0;
  double tail_moment_ = 0.0;
};

// Stationary joint law of (offset, age), one closed-form row per offset.
class JointStationary {
 public:
  JointStationary(std::vector<int> offsets, std::vector<GeometricMix> rows, long i_max);

  double pi(int drift, long aoi) const;  // 0 outside the support
  const std::vector<int>& drift_support() const { return offsets_; }
  long truncation_index() const { return i_max_; }
  double row_mass(int drift) const;      // full analytic marginal of one offset
  double row_residual(int drift) const;  // analytic row mass above i_max
  double residual() const;
  double total_mass() const;

 private:
  const GeometricMix* find_row(int drift) const;
  std::vector<int> offsets_;
  std::vector<GeometricMix> rows_;
  long i_max_;
};

// Constant offset d: the age law is d + geometric(success_prob).
double avg_aoi_deterministic(long drift, const Channel& ch);
AoiPmf aoi_pmf_deterministic(long drift, const Channel& ch,
                             std::optional<long> i_max = std::nullopt);

// Nonnegative categorical offsets.
JointStationary joint_stationary_positive(const CategoricalPositive& model, const Channel& ch,
                                          std::optional<long> i_max = std::nullopt);
AoiPmf aoi_pmf_positive(const CategoricalPositive& model, const Channel& ch,
                        std::optional<long> i_max = std::nullopt);
double avg_aoi_positive(const CategoricalPositive& model, const Channel& ch);

// Largest feasible per-value probability keeping the average age at or below
// aoi_threshold, clamped into [0, 1/max_drift].
double p_max(int max_drift, const Channel& ch, double aoi_threshold);

// Ternary offsets.
JointStationary joint_stationary_ternary(const Ternary& model, const Channel& ch,
                                         std::optional<long> i_max = std::nullopt);
AoiPmf aoi_pmf_ternary(const Ternary& model, const Channel& ch,
                       std::optional<long> i_max = std::nullopt);
double avg_aoi_ternary(const Ternary& model, const Channel& ch);

// Two closed-form candidates exist for the ternary stationary entry at
// (offset -1, age 1): the direct table value p_down*p_s and the value implied
// by the age-1 marginal, p_down*p_s*(1 + p_f*(1 - p_down)). Only the latter
// normalizes and solves the balance equations, so the joint law uses it; both
// are reported here for diagnostics.
struct CornerEntryValues {
  double table_value;
  double normalized_value;
};
CornerEntryValues ternary_corner_entry(const Ternary& model, const Channel& ch);

// Model-generic dispatchers.
double avg_aoi(const DriftModel& model, const Channel& ch);
AoiPmf aoi_pmf(const DriftModel& model, const Channel& ch,
               std::optional<long> i_max = std::nullopt);
JointStationary joint_stationary(const DriftModel& model, const Channel& ch,
                                 std::optional<long> i_max = std::nullopt);

}  // namespace aoidrift
