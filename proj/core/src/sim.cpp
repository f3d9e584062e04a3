#include "aoidrift/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

#include "aoidrift/recursion.hpp"
#include "aoidrift/rng.hpp"

namespace aoidrift {
namespace {

// Both bookkeeping views of one slot. The recursion view is authoritative;
// the timestamp view reconstructs the age as rx_time - gen_time + 1 and must
// match exactly, otherwise the update bookkeeping itself is broken.
struct SlotCursor {
  long prev_aoi = 1;
  int prev_drift = 0;
  long gen_time = 0;  // rx_time(0) + 1 - initial age

  // The virtual slot-0 offset must be a value the model can actually hold:
  // a constant offset never jumps, so it enters the first slot already at d;
  // the categorical models enter at 0.
  static int initial_offset(const DriftModel& model) {
    struct Visit {
      int operator()(const Deterministic& m) const { return static_cast<int>(m.drift); }
      int operator()(const CategoricalPositive&) const { return 0; }
      int operator()(const Ternary&) const { return 0; }
    };
    return std::visit(Visit{}, model);
  }

  SlotCursor(const DriftModel& model, long aoi_init)
      : prev_aoi(aoi_init),
        prev_drift(initial_offset(model)),
        gen_time(prev_drift + 1 - aoi_init) {}

  SlotRecord advance(const DriftModel& model, long t, int drift, bool success) {
    const long aoi = aoi_step(model, prev_aoi, prev_drift, drift, success);
    const long rx_time = t + drift;
    if (success) {
      // A delivery calibrates the effective generation timestamp so the
      // receiver-side age equals the recursion's reset value.
      gen_time = rx_time + 1 - aoi;
    }
    const long shifted = rx_time - gen_time + 1;
    const long aoi_timestamp = std::max<long>(1, shifted);
    if (aoi_timestamp != aoi) {
      throw Error(Errc::view_mismatch,
                  "slot " + std::to_string(t) + ": timestamp view " +
                      std::to_string(aoi_timestamp) + " != recursion view " +
                      std::to_string(aoi));
    }
    prev_aoi = aoi;
    prev_drift = drift;
    return {t, success, drift, aoi, aoi_timestamp, rx_time, gen_time};
  }
};

int schedule_drift_floor(const DriftModel& model) {
  return std::holds_alternative<Ternary>(model) ? -1 : 0;
}

int schedule_drift_ceil(const DriftModel& model) {
  struct Visit {
    int operator()(const Deterministic& m) const { return static_cast<int>(m.drift); }
    int operator()(const CategoricalPositive& m) const { return m.max_drift; }
    int operator()(const Ternary&) const { return 1; }
  };
  return std::visit(Visit{}, model);
}

}  // namespace

RunStats run(const DriftModel& model, const Channel& ch, long n_slots,
             std::uint64_t seed) {
  require_valid(model);
  require_valid(ch);
  if (n_slots < 1) {
    throw Error(Errc::bad_parameter,
                "n_slots = " + std::to_string(n_slots) + " must be >= 1");
  }

  RngStream rng(seed);
  const DriftSampler sampler(model);
  const double ps = ch.success_prob;

  std::vector<long> histogram(static_cast<std::size_t>(kHistogramCap) + 1, 0);
  unsigned long long aoi_sum = 0;       // exact: whole run fits comfortably
  unsigned long long overflow_sum = 0;  // ages beyond the histogram cap
  long overflow_count = 0;
  long max_aoi = 0;

  // Batch means absorb the slot-to-slot autocorrelation of the age process.
  const long n_batches = std::min<long>(100, n_slots);
  std::vector<double> batch_means;
  batch_means.reserve(static_cast<std::size_t>(n_batches));
  long batch_index = 0;
  long batch_end = n_slots / n_batches;  // slots 1..batch_end form batch 0
  unsigned long long batch_sum = 0;
  long batch_count = 0;

  SlotCursor cursor(model, 1);
  for (long t = 1; t <= n_slots; ++t) {
    const int drift = sampler.sample(rng);
    const bool success = rng.next_double() < ps;
    const SlotRecord rec = cursor.advance(model, t, drift, success);

    aoi_sum += static_cast<unsigned long long>(rec.aoi);
    max_aoi = std::max(max_aoi, rec.aoi);
    if (rec.aoi <= kHistogramCap) {
      ++histogram[static_cast<std::size_t>(rec.aoi)];
    } else {
      ++overflow_count;
      overflow_sum += static_cast<unsigned long long>(rec.aoi);
    }

    batch_sum += static_cast<unsigned long long>(rec.aoi);
    ++batch_count;
    if (t == batch_end) {
      batch_means.push_back(static_cast<double>(batch_sum) /
                            static_cast<double>(batch_count));
      batch_sum = 0;
      batch_count = 0;
      ++batch_index;
      batch_end = (batch_index + 1) * n_slots / n_batches;
    }
  }

  RunStats stats;
  stats.n_slots = n_slots;
  stats.seed = seed;
  stats.max_aoi = max_aoi;
  stats.overflow_count = overflow_count;
  stats.mean_aoi = static_cast<double>(aoi_sum) / static_cast<double>(n_slots);
  for (long i = 1; i <= kHistogramCap; ++i) {
    const long c = histogram[static_cast<std::size_t>(i)];
    if (c > 0) {
      stats.empirical_pmf[i] = static_cast<double>(c) / static_cast<double>(n_slots);
    }
  }
  if (batch_means.size() >= 2) {
    double grand = 0.0;
    for (double m : batch_means) grand += m;
    grand /= static_cast<double>(batch_means.size());
    double ss = 0.0;
    for (double m : batch_means) ss += (m - grand) * (m - grand);
    const double b = static_cast<double>(batch_means.size());
    stats.std_error = std::sqrt(ss / (b * (b - 1.0)));
  }
  return stats;
}

TraceResult run_trace(const DriftModel& model, const TraceSchedule& schedule,
                      long aoi_init) {
  require_valid(model);
  if (aoi_init < 1) {
    throw Error(Errc::bad_parameter,
                "aoi_init = " + std::to_string(aoi_init) + " must be >= 1");
  }
  if (schedule.success.size() != schedule.drift.size()) {
    throw Error(Errc::bad_schedule,
                "schedule lengths differ: " + std::to_string(schedule.success.size()) +
                    " outcomes vs " + std::to_string(schedule.drift.size()) + " offsets");
  }
  const int lo = schedule_drift_floor(model);
  const int hi = schedule_drift_ceil(model);
  for (std::size_t s = 0; s < schedule.drift.size(); ++s) {
    const int d = schedule.drift[s];
    const bool in_support =
        std::holds_alternative<Deterministic>(model) ? (d == hi) : (d >= lo && d <= hi);
    if (!in_support) {
      throw Error(Errc::bad_schedule,
                  "slot " + std::to_string(s + 1) + ": offset " + std::to_string(d) +
                      " is outside the model support");
    }
  }

  TraceResult result;
  result.slots.reserve(schedule.drift.size());
  result.aoi_nodrift.reserve(schedule.drift.size());
  SlotCursor cursor(model, aoi_init);
  long nodrift_prev = aoi_init;
  for (std::size_t s = 0; s < schedule.drift.size(); ++s) {
    const long t = static_cast<long>(s) + 1;
    result.slots.push_back(
        cursor.advance(model, t, schedule.drift[s], schedule.success[s]));
    // Reference trajectory with the offset pinned to zero: reset to age 1 on
    // success, otherwise age by one slot.
    nodrift_prev = schedule.success[s] ? 1 : nodrift_prev + 1;
    result.aoi_nodrift.push_back(nodrift_prev);
  }
  return result;
}

double empirical_pmf_distance(const RunStats& stats, const AoiPmf& pmf) {
  if (stats.n_slots < 1) {
    throw Error(Errc::bad_parameter, "empty run");
  }
  long limit = pmf.truncation_index();
  if (!stats.empirical_pmf.empty()) {
    limit = std::max(limit, stats.empirical_pmf.rbegin()->first);
  }
  double acc = 0.0;
  for (long i = 1; i <= limit; ++i) {
    const auto it = stats.empirical_pmf.find(i);
    const double freq = (it == stats.empirical_pmf.end()) ? 0.0 : it->second;
    acc += std::abs(freq - pmf.prob(i));
  }
  acc += pmf.mass_above(limit);
  // Empirical mass past the histogram cap has no recorded location; count it
  // as fully displaced.
  acc += static_cast<double>(stats.overflow_count) / static_cast<double>(stats.n_slots);
  return acc / 2.0;
}

}  // namespace aoidrift
