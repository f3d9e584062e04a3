#include "aoidrift/dtmc.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <variant>

#include "aoidrift/recursion.hpp"

namespace aoidrift {
namespace {

// Smallest age that can coexist with offset k once the chain has left its
// initial state: every success resets the age to this value and failures only
// age upward from it.
long min_age_for(const DriftModel& model, int k) {
  struct Visit {
    int k;
    long operator()(const Deterministic& m) const { return m.drift + 1; }
    long operator()(const CategoricalPositive&) const { return k == 0 ? 1 : k + 1; }
    long operator()(const Ternary&) const { return k == 1 ? 2 : 1; }
  };
  return std::visit(Visit{k}, model);
}

// Minimum usable truncation: largest reset age plus a couple of slots, so the
// boundary structure of the law is not swallowed by the top bucket.
long model_floor(const DriftModel& model) {
  struct Visit {
    long operator()(const Deterministic& m) const { return m.drift + 3; }
    long operator()(const CategoricalPositive& m) const { return m.max_drift + 3; }
    long operator()(const Ternary&) const { return 4; }
  };
  return std::visit(Visit{}, model);
}

constexpr std::size_t kMaxStates = 200'000;
constexpr std::size_t kMaxDirectStates = 3'000;

long lookup(const std::vector<std::tuple<int, std::size_t, long>>& offsets, long i_max,
            int drift, long aoi) {
  for (const auto& [k, first, min_age] : offsets) {
    if (k != drift) continue;
    if (aoi < min_age || aoi > i_max) return -1;
    return static_cast<long>(first) + (aoi - min_age);
  }
  return -1;
}

}  // namespace

long TransitionMatrix::state_index(int drift, long aoi) const {
  return lookup(offsets_, i_max_, drift, aoi);
}

double TransitionMatrix::prob(std::size_t from, std::size_t to) const {
  for (const auto& [dest, p] : rows_[from]) {
    if (dest == to) return p;
  }
  return 0.0;
}

double TransitionMatrix::row_sum(std::size_t from) const {
  double s = 0.0;
  for (const auto& [dest, p] : rows_[from]) s += p;
  return s;
}

long default_chain_truncation(const DriftModel& model, const Channel& ch) {
  require_valid(model);
  // The age law is a geometric mix with ratio pf shifted by the model's reset
  // age, so the channel-only index must be pushed out by that shift or the top
  // bucket holds ~pf^{i_max - shift} instead of ~pf^{i_max}.
  return std::min(default_truncation_index(ch) + model_floor(model), kTruncationCap);
}

TransitionMatrix build_chain(const DriftModel& model, const Channel& ch, long i_max) {
  require_valid(model);
  require_positive_success(ch);
  if (i_max < model_floor(model)) {
    throw Error(Errc::truncation_too_small,
                "i_max = " + std::to_string(i_max) + " is below the model floor " +
                    std::to_string(model_floor(model)));
  }

  const auto pmf = drift_pmf(model);

  TransitionMatrix matrix;
  matrix.i_max_ = i_max;
  matrix.channel_ = ch;
  for (const auto& [k, p] : pmf) {
    const long min_age = min_age_for(model, k);
    matrix.offsets_.emplace_back(k, matrix.states_.size(), min_age);
    for (long i = min_age; i <= i_max; ++i) {
      matrix.states_.push_back({k, i});
    }
  }
  if (matrix.states_.size() > kMaxStates) {
    throw Error(Errc::bad_parameter,
                "state space of " + std::to_string(matrix.states_.size()) +
                    " exceeds the supported maximum of " + std::to_string(kMaxStates));
  }

  const double ps = ch.success_prob;
  const double pf = ch.failure_prob();
  matrix.rows_.resize(matrix.states_.size());
  for (std::size_t s = 0; s < matrix.states_.size(); ++s) {
    const JointState from = matrix.states_[s];
    auto& row = matrix.rows_[s];
    auto add = [&](int k_next, long aoi_next, double p) {
      if (!(p > 0.0)) return;
      // Ages past the truncation land in the top bucket, keeping rows stochastic.
      const long dest = matrix.state_index(k_next, std::min(aoi_next, i_max));
      if (dest < 0) {
        throw Error(Errc::bad_parameter, "internal: recursion left the state space");
      }
      for (auto& [d, v] : row) {
        if (d == static_cast<std::uint32_t>(dest)) {
          v += p;
          return;
        }
      }
      row.emplace_back(static_cast<std::uint32_t>(dest), p);
    };
    // Destination age comes straight from the slot recursion; outcomes that
    // coincide (e.g. both branches clamped to age 1) merge into one entry.
    for (const auto& [k_next, p_k] : pmf) {
      if (!(p_k > 0.0)) continue;
      add(k_next, aoi_step(model, from.aoi, from.drift, k_next, true), p_k * ps);
      if (pf > 0.0) {
        add(k_next, aoi_step(model, from.aoi, from.drift, k_next, false), p_k * pf);
      }
    }
  }
  return matrix;
}

namespace {

// ||x P - x||_inf for a row-sparse matrix.
double balance_error(const TransitionMatrix& matrix, const std::vector<double>& x) {
  std::vector<double> next(x.size(), 0.0);
  for (std::size_t s = 0; s < x.size(); ++s) {
    for (const auto& [to, p] : matrix.row(s)) next[to] += x[s] * p;
  }
  double err = 0.0;
  for (std::size_t s = 0; s < x.size(); ++s) {
    err = std::max(err, std::abs(next[s] - x[s]));
  }
  return err;
}

}  // namespace

StationarySolution stationary(const TransitionMatrix& matrix, double tol, long max_iter,
                              SolveMethod method) {
  if (!(tol > 0.0)) {
    throw Error(Errc::bad_parameter, "tolerance must be positive");
  }
  if (max_iter < 1) {
    throw Error(Errc::bad_parameter, "max_iter must be >= 1");
  }
  const std::size_t n = matrix.size();
  if (n == 0) {
    throw Error(Errc::bad_parameter, "empty chain");
  }

  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  long iterations = 0;

  if (method == SolveMethod::power_iteration) {
    std::vector<double> next(n);
    double err = std::numeric_limits<double>::infinity();
    while (iterations < max_iter) {
      ++iterations;
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t s = 0; s < n; ++s) {
        const double mass = x[s];
        if (mass == 0.0) continue;
        for (const auto& [to, p] : matrix.row(s)) next[to] += mass * p;
      }
      double sum = 0.0;
      for (double v : next) sum += v;
      for (double& v : next) v /= sum;
      err = 0.0;
      for (std::size_t s = 0; s < n; ++s) err = std::max(err, std::abs(next[s] - x[s]));
      x.swap(next);
      if (err <= tol) break;
    }
    if (err > tol) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.3g", err);
      throw Error(Errc::no_convergence,
                  "power iteration stalled at step error " + std::string(buf) +
                      " after " + std::to_string(iterations) + " iterations");
    }
  } else {
    if (n > kMaxDirectStates) {
      throw Error(Errc::bad_parameter,
                  "direct solver is limited to " + std::to_string(kMaxDirectStates) +
                      " states (" + std::to_string(n) + " requested); use power iteration");
    }
    // Balance equations (P^T - I) x = 0 with the first equation replaced by
    // the normalization sum(x) = 1. The chain has a single recurrent class,
    // so the system is nonsingular.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < n; ++s) {
      for (const auto& [to, p] : matrix.row(s)) {
        a(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(s)) += p;
      }
    }
    a -= Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                   static_cast<Eigen::Index>(n));
    a.row(0).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    b(0) = 1.0;
    const Eigen::VectorXd solved = a.colPivHouseholderQr().solve(b);
    for (std::size_t s = 0; s < n; ++s) x[s] = solved(static_cast<Eigen::Index>(s));
  }

  // Clamp solver noise below zero, then renormalize exactly once.
  double sum = 0.0;
  for (double& v : x) {
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  for (double& v : x) v /= sum;

  StationarySolution sol;
  sol.states = matrix.states();
  sol.pi = std::move(x);
  sol.method = method;
  sol.iterations = (method == SolveMethod::power_iteration) ? iterations : 0;
  sol.offsets = matrix.offset_table();
  sol.i_max = matrix.truncation_index();
  sol.convergence_error = balance_error(matrix, sol.pi);

  double bucket = 0.0;
  for (std::size_t s = 0; s < sol.states.size(); ++s) {
    if (sol.states[s].aoi == sol.i_max) bucket += sol.pi[s];
  }
  sol.top_bucket_mass = bucket;
  // The clamped tail is geometric with ratio failure_prob, so its mean excess
  // beyond the bucket is at most bucket * pf/ps; one extra bucket covers the
  // in-range perturbation.
  const Channel& ch = matrix.channel();
  sol.residual_bound = bucket * (1.0 + ch.failure_prob() / ch.success_prob);
  return sol;
}

double StationarySolution::pi_at(int drift, long aoi) const {
  const long idx = lookup(offsets, i_max, drift, aoi);
  return idx < 0 ? 0.0 : pi[static_cast<std::size_t>(idx)];
}

AoiPmf aoi_marginal(const StationarySolution& sol) {
  std::vector<double> probs(static_cast<std::size_t>(sol.i_max), 0.0);
  for (std::size_t s = 0; s < sol.states.size(); ++s) {
    probs[static_cast<std::size_t>(sol.states[s].aoi - 1)] += sol.pi[s];
  }
  return AoiPmf::from_enumerated(std::move(probs));
}

double mean_aoi(const StationarySolution& sol) {
  if (sol.residual_bound > 1e-9) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", sol.residual_bound);
    throw Error(Errc::truncation_too_small,
                "truncation bias bound " + std::string(buf) +
                    " exceeds 1e-9; rebuild the chain with a larger i_max");
  }
  double mean = 0.0;
  for (std::size_t s = 0; s < sol.states.size(); ++s) {
    mean += static_cast<double>(sol.states[s].aoi) * sol.pi[s];
  }
  return mean;
}

}  // namespace aoidrift
