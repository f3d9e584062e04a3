#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "aoidrift/analytic.hpp"
#include "aoidrift/model.hpp"

namespace aoidrift {

struct JointState {
  int drift;
  long aoi;
  friend bool operator==(const JointState&, const JointState&) = default;
};

// Row-stochastic transition matrix of the joint (offset, age) chain,
// truncated at i_max. Transitions that would exceed i_max land in the top
// age bucket, so every row still sums to one exactly.
//
// States are enumerated offset-major, ages ascending, each offset starting at
// the smallest age that can coexist with it once the chain has left its
// initial state.
class TransitionMatrix {
 public:
  using Entry = std::pair<std::uint32_t, double>;  // (destination index, probability)

  const std::vector<JointState>& states() const { return states_; }
  std::size_t size() const { return states_.size(); }
  const std::vector<Entry>& row(std::size_t from) const { return rows_[from]; }
  long truncation_index() const { return i_max_; }
  const Channel& channel() const { return channel_; }

  long state_index(int drift, long aoi) const;  // -1 if absent
  double prob(std::size_t from, std::size_t to) const;
  double row_sum(std::size_t from) const;

  // (drift value, first state index, smallest age) per offset, drift ascending.
  const std::vector<std::tuple<int, std::size_t, long>>& offset_table() const {
    return offsets_;
  }

 private:
  friend TransitionMatrix build_chain(const DriftModel&, const Channel&, long);
  std::vector<JointState> states_;
  std::vector<std::vector<Entry>> rows_;
  std::vector<std::tuple<int, std::size_t, long>> offsets_;
  long i_max_ = 0;
  Channel channel_;
};

// Generates the chain directly from the slot recursion: for each state and
// each (next offset, channel outcome) pair, the destination age is one
// aoi_step evaluation. Requires i_max at least the model floor (largest reset
// age + 3) so the interesting boundary structure survives truncation.
TransitionMatrix build_chain(const DriftModel& model, const Channel& ch, long i_max);

// Default i_max for chain building: the analytic default, raised to the
// model floor when needed.
long default_chain_truncation(const DriftModel& model, const Channel& ch);

enum class SolveMethod {
  power_iteration,  // sparse, any size
  direct_linear,    // dense solve of the balance equations; small chains only
};

struct StationarySolution {
  std::vector<JointState> states;
  std::vector<double> pi;
  double convergence_error = 0.0;  // ||pi P - pi||_inf, recomputed after the solve
  long iterations = 0;             // 0 for the direct solver
  SolveMethod method = SolveMethod::power_iteration;
  double top_bucket_mass = 0.0;    // stationary mass parked at the truncation age
  double residual_bound = 0.0;     // upper bound on the truncation bias of the mean

  double pi_at(int drift, long aoi) const;  // 0 if the state is absent

  // internal: mirrors TransitionMatrix offset lookup
  std::vector<std::tuple<int, std::size_t, long>> offsets;
  long i_max = 0;
};

StationarySolution stationary(const TransitionMatrix& matrix, double tol = 1e-12,
                              long max_iter = 1'000'000,
                              SolveMethod method = SolveMethod::power_iteration);

// Age marginal of the solved chain: sums pi over offsets at each age.
AoiPmf aoi_marginal(const StationarySolution& sol);

// Mean age of the solved chain over the truncated support. Refuses to answer
// when the truncation bias bound exceeds 1e-9.
double mean_aoi(const StationarySolution& sol);

}  // namespace aoidrift
