#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "aoidrift/analytic.hpp"
#include "aoidrift/model.hpp"

namespace aoidrift {

// One simulated slot, carrying both AoI bookkeeping views. The timestamp view
// reconstructs the age from receiver clock minus generation timestamp; it
// must equal the recursion view on every slot, and the simulator throws
// Errc::view_mismatch if it ever does not.
struct SlotRecord {
  long t = 0;              // slot index on the transmitter clock
  bool success = false;    // channel outcome
  int drift = 0;           // receiver clock offset this slot
  long aoi = 0;            // recursion view
  long aoi_timestamp = 0;  // timestamp view; always equals aoi
  long rx_time = 0;        // receiver clock reading, t + drift
  long gen_time = 0;       // timestamp backing the freshest delivered update
};

inline constexpr long kHistogramCap = 10'000;

struct RunStats {
  long n_slots = 0;
  double mean_aoi = 0.0;
  std::map<long, double> empirical_pmf;  // age -> relative frequency, ages <= kHistogramCap
  double std_error = 0.0;                // batch-means standard error of mean_aoi
  std::uint64_t seed = 0;
  long max_aoi = 0;
  long overflow_count = 0;               // slots whose age exceeded kHistogramCap
};

// Explicit per-slot outcomes for exact replay of a known trajectory.
struct TraceSchedule {
  std::vector<bool> success;
  std::vector<int> drift;
};

struct TraceResult {
  std::vector<SlotRecord> slots;
  std::vector<long> aoi_nodrift;  // same channel outcomes, offsets pinned to zero
};

// Seeded slot-level run. The state entering the first slot is age 1 with the
// model's resting offset (d for a constant offset, 0 otherwise). Each slot
// consumes exactly two rng draws — offset first, then channel — so identical
// arguments give bit-identical stats.
RunStats run(const DriftModel& model, const Channel& ch, long n_slots, std::uint64_t seed);

// Replays a fixed schedule through the same recursion and timestamp
// bookkeeping as run(). Schedule offsets must lie in the model's support.
TraceResult run_trace(const DriftModel& model, const TraceSchedule& schedule,
                      long aoi_init = 1);

// Total-variation distance between the empirical age distribution and a
// reference law, including the analytic tail beyond the compared range.
double empirical_pmf_distance(const RunStats& stats, const AoiPmf& pmf);

}  // namespace aoidrift
