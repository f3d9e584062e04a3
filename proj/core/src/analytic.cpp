#include "aoidrift/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

namespace aoidrift {
namespace {

void require_truncation(long i_max) {
  if (i_max < 1) {
    throw Error(Errc::bad_parameter,
                "truncation index " + std::to_string(i_max) + " must be >= 1");
  }
}

}  // namespace

long default_truncation_index(const Channel& ch) {
  require_positive_success(ch);
  const double pf = ch.failure_prob();
  if (pf <= 0.0) return 1;
  // Smallest i with pf^i below the tail threshold: log estimate, then exact
  // adjustment with deterministic integer powers.
  long i = static_cast<long>(std::ceil(std::log(kTailThreshold) / std::log(pf)));
  i = std::clamp<long>(i, 1, kTruncationCap);
  while (i > 1 && ipow(pf, i - 1) < kTailThreshold) --i;
  while (i < kTruncationCap && ipow(pf, i) >= kTailThreshold) ++i;
  return i;
}

// ---------------------------------------------------------------------------
// AoiPmf

AoiPmf AoiPmf::from_closed_form(GeometricMix mix, long i_max) {
  require_truncation(i_max);
  AoiPmf pmf;
  pmf.mix_ = std::move(mix);
  pmf.i_max_ = i_max;
  pmf.prefix_.resize(static_cast<std::size_t>(i_max));
  for (long i = 1; i <= i_max; ++i) {
    pmf.prefix_[static_cast<std::size_t>(i - 1)] = pmf.mix_->prob(i);
  }
  pmf.residual_ = pmf.mix_->mass_above(i_max);
  pmf.tail_moment_ = pmf.mix_->first_moment_above(i_max);
  return pmf;
}

AoiPmf AoiPmf::from_enumerated(std::vector<double> probs) {
  AoiPmf pmf;
  pmf.prefix_ = std::move(probs);
  pmf.i_max_ = static_cast<long>(pmf.prefix_.size());
  return pmf;
}

double AoiPmf::prob(long i) const {
  if (i < 1) return 0.0;
  if (mix_) return mix_->prob(i);
  if (i > i_max_) return 0.0;
  return prefix_[static_cast<std::size_t>(i - 1)];
}

double AoiPmf::mass_above(long index) const {
  if (mix_) return mix_->mass_above(index);
  double s = 0.0;
  for (long i = std::max<long>(index + 1, 1); i <= i_max_; ++i) {
    s += prefix_[static_cast<std::size_t>(i - 1)];
  }
  return s;
}

double AoiPmf::prefix_mass() const {
  double s = 0.0;
  for (double p : prefix_) s += p;
  return s;
}

double AoiPmf::mean() const {
  double m = tail_moment_;
  for (long i = 1; i <= i_max_; ++i) {
    m += static_cast<double>(i) * prefix_[static_cast<std::size_t>(i - 1)];
  }
  return m;
}

// ---------------------------------------------------------------------------
// JointStationary

JointStationary::JointStationary(std::vector<int> offsets, std::vector<GeometricMix> rows,
                                 long i_max)
    : offsets_(std::move(offsets)), rows_(std::move(rows)), i_max_(i_max) {
  require_truncation(i_max_);
  if (offsets_.size() != rows_.size()) {
    throw Error(Errc::bad_parameter, "joint law has mismatched offset/row counts");
  }
}

const GeometricMix* JointStationary::find_row(int drift) const {
  for (std::size_t i = 0; i < offsets_.size(); ++i) {
    if (offsets_[i] == drift) return &rows_[i];
  }
  return nullptr;
}

double JointStationary::pi(int drift, long aoi) const {
  if (aoi < 1) return 0.0;
  const GeometricMix* row = find_row(drift);
  return row ? row->prob(aoi) : 0.0;
}

double JointStationary::row_mass(int drift) const {
  const GeometricMix* row = find_row(drift);
  return row ? row->total_mass() : 0.0;
}

double JointStationary::row_residual(int drift) const {
  const GeometricMix* row = find_row(drift);
  return row ? row->mass_above(i_max_) : 0.0;
}

double JointStationary::residual() const {
  double s = 0.0;
  for (const auto& row : rows_) s += row.mass_above(i_max_);
  return s;
}

double JointStationary::total_mass() const {
  double s = 0.0;
  for (const auto& row : rows_) s += row.total_mass();
  return s;
}

// ---------------------------------------------------------------------------
// Constant offset

double avg_aoi_deterministic(long drift, const Channel& ch) {
  require_valid(DriftModel{Deterministic{drift}});
  require_positive_success(ch);
  return static_cast<double>(drift) + 1.0 / ch.success_prob;
}

AoiPmf aoi_pmf_deterministic(long drift, const Channel& ch, std::optional<long> i_max) {
  require_valid(DriftModel{Deterministic{drift}});
  require_positive_success(ch);
  // Age d+1 on a fresh delivery, then geometric aging: ps * pf^(i-d-1).
  GeometricMix mix(ch.failure_prob());
  mix.add_term(drift + 1, ch.success_prob);
  return AoiPmf::from_closed_form(std::move(mix),
                                  i_max.value_or(default_truncation_index(ch)));
}

// ---------------------------------------------------------------------------
// Nonnegative categorical offsets

JointStationary joint_stationary_positive(const CategoricalPositive& model,
                                          const Channel& ch, std::optional<long> i_max) {
  require_valid(DriftModel{model});
  require_positive_success(ch);
  const double ps = ch.success_prob;
  const double pf = ch.failure_prob();
  const long trunc = i_max.value_or(default_truncation_index(ch));

  std::vector<int> offsets;
  std::vector<GeometricMix> rows;
  // Offset 0 coexists with any age >= 1; offset k >= 1 only with ages > k.
  GeometricMix row0(pf);
  row0.add_term(1, model.p_zero() * ps);
  offsets.push_back(0);
  rows.push_back(std::move(row0));
  for (int k = 1; k <= model.max_drift; ++k) {
    GeometricMix row(pf);
    row.add_term(k + 1, model.p_each * ps);
    offsets.push_back(k);
    rows.push_back(std::move(row));
  }
  return JointStationary(std::move(offsets), std::move(rows), trunc);
}

AoiPmf aoi_pmf_positive(const CategoricalPositive& model, const Channel& ch,
                        std::optional<long> i_max) {
  require_valid(DriftModel{model});
  require_positive_success(ch);
  const double ps = ch.success_prob;
  const double pf = ch.failure_prob();

  // Age marginal: a geometric stem from the zero-offset row plus partial sums
  // of the positive-offset rows. Below age K+1 only offsets k < i contribute,
  // which yields the (1 - pf^(i-1)) heads; from K+1 on, all K of them do.
  GeometricMix mix(pf);
  mix.add_term(1, model.p_zero() * ps);
  for (long i = 2; i <= model.max_drift; ++i) {
    mix.add_head(i, model.p_each * (1.0 - ipow(pf, i - 1)));
  }
  mix.add_term(model.max_drift + 1, model.p_each * (1.0 - ipow(pf, model.max_drift)));
  return AoiPmf::from_closed_form(std::move(mix),
                                  i_max.value_or(default_truncation_index(ch)));
}

double avg_aoi_positive(const CategoricalPositive& model, const Channel& ch) {
  require_valid(DriftModel{model});
  require_positive_success(ch);
  // Mean age = mean service age + mean offset; using mean_drift keeps the
  // identity with the generic decomposition exact in floating point.
  return 1.0 / ch.success_prob + mean_drift(DriftModel{model});
}

double p_max(int max_drift, const Channel& ch, double aoi_threshold) {
  if (max_drift < 1) {
    throw Error(Errc::bad_parameter,
                "max_drift = " + std::to_string(max_drift) + " must be >= 1");
  }
  require_positive_success(ch);
  if (!(aoi_threshold > 0.0) || !std::isfinite(aoi_threshold)) {
    throw Error(Errc::bad_parameter, "aoi_threshold must be positive and finite");
  }
  const double ps = ch.success_prob;
  const double k = static_cast<double>(max_drift);
  // Invert mean = 1/ps + p*K(K+1)/2 <= threshold for p, then clamp into the
  // feasible range [0, 1/K].
  const double raw = 2.0 * (ps * aoi_threshold - 1.0) / (k * (k + 1.0) * ps);
  return std::max(0.0, std::min(1.0 / k, raw));
}

// ---------------------------------------------------------------------------
// Ternary offsets

namespace {

// Shared constants of the ternary stationary law.
struct TernaryLaw {
  double ps, pf;
  double q;  // 1 - p_down: probability the offset does not decrease
  double f;  // 1 - ps*q: per-slot rate at which an age run survives
};

TernaryLaw ternary_law(const Ternary& model, const Channel& ch) {
  const double q = 1.0 - model.p_down;
  return {ch.success_prob, ch.failure_prob(), q, 1.0 - ch.success_prob * q};
}

}  // namespace

JointStationary joint_stationary_ternary(const Ternary& model, const Channel& ch,
                                         std::optional<long> i_max) {
  require_valid(DriftModel{model});
  require_positive_success(ch);
  const auto law = ternary_law(model, ch);
  const long trunc = i_max.value_or(default_truncation_index(ch));

  std::vector<int> offsets{-1, 0, 1};
  std::vector<GeometricMix> rows;

  // Offset -1: the age-1 entry uses the normalization-consistent corner value
  // (see ternary_corner_entry); from age 2 the row is geometric.
  GeometricMix down(law.pf);
  down.add_head(1, ternary_corner_entry(model, ch).normalized_value);
  down.add_term(2, model.p_down * law.ps * law.pf * law.f);
  rows.push_back(std::move(down));

  // Offset 0: fresh delivery at age 1, one survived slot at age 2, then
  // geometric decay damped by f.
  GeometricMix zero(law.pf);
  zero.add_head(1, model.p_zero * law.ps);
  zero.add_head(2, model.p_zero * law.ps * law.pf * law.q);
  zero.add_term(3, model.p_zero * law.ps * law.pf * law.f);
  rows.push_back(std::move(zero));

  // Offset +1: ages start at 2.
  GeometricMix up(law.pf);
  up.add_head(2, model.p_up * law.ps);
  up.add_head(3, model.p_up * law.ps * law.pf * law.q);
  up.add_term(4, model.p_up * law.ps * law.pf * law.f);
  rows.push_back(std::move(up));

  return JointStationary(std::move(offsets), std::move(rows), trunc);
}

AoiPmf aoi_pmf_ternary(const Ternary& model, const Channel& ch,
                       std::optional<long> i_max) {
  require_valid(DriftModel{model});
  require_positive_success(ch);
  const auto law = ternary_law(model, ch);
  const double ps = law.ps;
  const double pf = law.pf;

  // Age marginal: explicit values for ages 1..3 where the offset rows differ,
  // then a single geometric with all three rows aligned.
  GeometricMix mix(pf);
  mix.add_head(1, model.p_zero * ps + model.p_down * ps * (1.0 + pf * law.q));
  mix.add_head(2, model.p_down * ps * pf * law.f + model.p_zero * ps * pf * law.q +
                      model.p_up * ps);
  mix.add_head(3, (model.p_down * ps * pf * pf + model.p_zero * ps * pf) * law.f +
                      model.p_up * ps * pf * law.q);
  mix.add_term(4, (model.p_down * pf * pf * pf + model.p_zero * pf * pf +
                   model.p_up * pf) *
                      ps * law.f);
  return AoiPmf::from_closed_form(std::move(mix),
                                  i_max.value_or(default_truncation_index(ch)));
}

double avg_aoi_ternary(const Ternary& model, const Channel& ch) {
  require_valid(DriftModel{model});
  require_positive_success(ch);
  return model.p_up + 1.0 / ch.success_prob;
}

CornerEntryValues ternary_corner_entry(const Ternary& model, const Channel& ch) {
  require_valid(DriftModel{model});
  require_positive_success(ch);
  const auto law = ternary_law(model, ch);
  const double table = model.p_down * law.ps;
  // The age-1 balance equation at offset -1 collects the fresh delivery plus
  // the clamped failure inflow from (0,1) and (1,2); the bare table value
  // misses the latter and does not normalize.
  const double normalized = model.p_down * law.ps * (1.0 + law.pf * law.q);
  return {table, normalized};
}

// ---------------------------------------------------------------------------
// Generic dispatchers

double avg_aoi(const DriftModel& model, const Channel& ch) {
  struct Visit {
    const Channel& ch;
    double operator()(const Deterministic& m) const {
      return avg_aoi_deterministic(m.drift, ch);
    }
    double operator()(const CategoricalPositive& m) const {
      return avg_aoi_positive(m, ch);
    }
    double operator()(const Ternary& m) const { return avg_aoi_ternary(m, ch); }
  };
  return std::visit(Visit{ch}, model);
}

AoiPmf aoi_pmf(const DriftModel& model, const Channel& ch, std::optional<long> i_max) {
  struct Visit {
    const Channel& ch;
    std::optional<long> i_max;
    AoiPmf operator()(const Deterministic& m) const {
      return aoi_pmf_deterministic(m.drift, ch, i_max);
    }
    AoiPmf operator()(const CategoricalPositive& m) const {
      return aoi_pmf_positive(m, ch, i_max);
    }
    AoiPmf operator()(const Ternary& m) const { return aoi_pmf_ternary(m, ch, i_max); }
  };
  return std::visit(Visit{ch, i_max}, model);
}

JointStationary joint_stationary(const DriftModel& model, const Channel& ch,
                                 std::optional<long> i_max) {
  struct Visit {
    const Channel& ch;
    std::optional<long> i_max;
    JointStationary operator()(const Deterministic& m) const {
      require_valid(DriftModel{m});
      require_positive_success(ch);
      GeometricMix row(ch.failure_prob());
      row.add_term(m.drift + 1, ch.success_prob);
      return JointStationary({static_cast<int>(m.drift)}, {std::move(row)},
                             i_max.value_or(default_truncation_index(ch)));
    }
    JointStationary operator()(const CategoricalPositive& m) const {
      return joint_stationary_positive(m, ch, i_max);
    }
    JointStationary operator()(const Ternary& m) const {
      return joint_stationary_ternary(m, ch, i_max);
    }
  };
  return std::visit(Visit{ch, i_max}, model);
}

}  // namespace aoidrift
