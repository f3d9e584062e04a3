#pragma once

#include <algorithm>
#include <variant>

#include "aoidrift/model.hpp"

namespace aoidrift {

// One slot of the AoI recursion, shared by the simulator and the chain
// builder. `prev_aoi`/`prev_drift` describe the previous slot; `drift` is the
// offset drawn for the current slot.
//
// On success the age restarts from the current offset (the delivered update
// is one slot old on the receiver clock). On failure it ages by one slot plus
// the change in offset. The nonnegative-offset models never need the floor on
// the success branch; the ternary model can dip to offset -1 and is clamped
// so ages stay >= 1.
inline long aoi_step(const DriftModel& model, long prev_aoi, int prev_drift,
                     int drift, bool success) {
  struct Step {
    long prev_aoi;
    int prev_drift;
    int drift;
    bool success;

    long operator()(const Deterministic& m) const {
      return success ? m.drift + 1 : prev_aoi + 1;
    }
    long operator()(const CategoricalPositive&) const {
      if (success) return static_cast<long>(drift) + 1;
      return std::max<long>(1, prev_aoi + drift - prev_drift + 1);
    }
    long operator()(const Ternary&) const {
      if (success) return std::max<long>(1, static_cast<long>(drift) + 1);
      return std::max<long>(1, prev_aoi + drift - prev_drift + 1);
    }
  };
  return std::visit(Step{prev_aoi, prev_drift, drift, success}, model);
}

}  // namespace aoidrift
