// Acceptance suite: ten end-to-end criteria checked against frozen
// tolerances, one PASS/FAIL line each. Exit code 0 only if all pass.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "aoidrift/analytic.hpp"
#include "aoidrift/dtmc.hpp"
#include "aoidrift/model.hpp"
#include "aoidrift/rng.hpp"
#include "aoidrift/sim.hpp"
#include "cli.hpp"

using namespace aoidrift;

namespace {

// Frozen tolerances and scales.
constexpr long kSlots = 1'000'000;          // slots per simulated grid point
constexpr long kSlotsTwoView = 100'000;     // slots for the two-view consistency runs
constexpr std::uint64_t kSeed = 777'000;    // base seed; points derive via XOR
constexpr double kMeanRelTol = 0.01;        // 1% fallback band for sim means
constexpr double kDtmcMeanTol = 1e-8;       // chain mean vs closed form
constexpr double kJointEntryTol = 1e-8;     // chain stationary entry vs closed form
constexpr double kMarginalTol = 1e-8;       // chain age marginal vs closed form
constexpr double kTvBound = 0.005;          // empirical vs closed-form total variation
constexpr double kPmaxTol = 1e-12;          // drift budget arithmetic
constexpr double kNormTol = 1e-10;          // pmf normalization (analytic tails)
constexpr double kKsumTol = 1e-12;          // joint-marginal consistency
constexpr double kReductionTol = 1e-14;     // model-reduction entrywise agreement

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail = "") {
  std::cout << "criterion " << id << " (" << name << "): " << (pass ? "PASS" : "FAIL");
  if (!detail.empty()) std::cout << " — " << detail;
  std::cout << "\n";
  if (!pass) ++failures;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// One grid point evaluated by all three engines.
struct ThreeWay {
  DriftModel model;
  double ps;
  double mean_analytic;
  RunStats stats;
  AoiPmf pmf;
  JointStationary joint;
  StationarySolution sol;
  AoiPmf dtmc_marginal;
  double mean_dtmc;
};

ThreeWay evaluate(const DriftModel& model, const Channel& ch, std::uint64_t seed) {
  const auto chain = build_chain(model, ch, default_chain_truncation(model, ch));
  StationarySolution sol = stationary(chain, 1e-12, 1'000'000, SolveMethod::direct_linear);
  AoiPmf marginal = aoi_marginal(sol);
  const double mean_dtmc = mean_aoi(sol);
  return ThreeWay{model,
                  ch.success_prob,
                  avg_aoi(model, ch),
                  run(model, ch, kSlots, seed),
                  aoi_pmf(model, ch),
                  joint_stationary(model, ch, chain.truncation_index()),
                  std::move(sol),
                  std::move(marginal),
                  mean_dtmc};
}

// Sim mean within max(3*std_error, 1%) of the closed form; chain mean within
// kDtmcMeanTol. Appends a description of the first violation to `why`.
bool three_way_ok(const ThreeWay& r, std::string& why) {
  const double band = std::max(3.0 * r.stats.std_error, kMeanRelTol * r.mean_analytic);
  if (std::abs(r.stats.mean_aoi - r.mean_analytic) > band) {
    why = describe(r.model) + " ps=" + num(r.ps) + ": sim mean " + num(r.stats.mean_aoi) +
          " vs analytic " + num(r.mean_analytic) + " outside " + num(band);
    return false;
  }
  if (std::abs(r.mean_dtmc - r.mean_analytic) > kDtmcMeanTol) {
    why = describe(r.model) + " ps=" + num(r.ps) + ": chain mean " + num(r.mean_dtmc) +
          " vs analytic " + num(r.mean_analytic);
    return false;
  }
  return true;
}

// Largest |pi_chain - pi_analytic| over every truncated chain state; the top
// age bucket absorbs the analytic row tail, so the comparison is exact there
// as well.
double max_joint_diff(const ThreeWay& r) {
  double worst = 0.0;
  for (std::size_t s = 0; s < r.sol.states.size(); ++s) {
    const JointState& st = r.sol.states[s];
    double expect = r.joint.pi(st.drift, st.aoi);
    if (st.aoi == r.sol.i_max) expect += r.joint.row_residual(st.drift);
    worst = std::max(worst, std::abs(r.sol.pi[s] - expect));
  }
  return worst;
}

double max_marginal_diff(const ThreeWay& r) {
  double worst = 0.0;
  for (long i = 1; i <= r.dtmc_marginal.truncation_index(); ++i) {
    double expect = r.pmf.prob(i);
    if (i == r.dtmc_marginal.truncation_index()) expect += r.pmf.mass_above(i);
    worst = std::max(worst, std::abs(r.dtmc_marginal.prob(i) - expect));
  }
  return worst;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

// ---------------------------------------------------------------------------

void criterion_1() {
  std::string why;
  bool pass = true;
  std::uint64_t index = 0;
  for (long d : {0L, 1L, 5L}) {
    for (double ps : {0.2, 0.5, 0.8}) {
      const ThreeWay r = evaluate(DriftModel{Deterministic{d}}, Channel{ps},
                                  kSeed ^ (100 + index++));
      const double expect = static_cast<double>(d) + 1.0 / ps;
      if (std::abs(r.mean_analytic - expect) > 1e-12) {
        pass = false;
        why = "closed form " + num(r.mean_analytic) + " != " + num(expect);
        break;
      }
      if (!three_way_ok(r, why)) {
        pass = false;
        break;
      }
    }
    if (!pass) break;
  }
  report(1, "constant-offset mean, three engines", pass, why);
}

void criterion_2(const std::vector<ThreeWay>& positive) {
  std::string why;
  bool pass = true;
  for (const ThreeWay& r : positive) {
    if (!three_way_ok(r, why)) {
      pass = false;
      break;
    }
  }
  if (pass) {
    const double anchor_a =
        avg_aoi(DriftModel{CategoricalPositive{1, 1.0}}, Channel{0.5});
    const double anchor_b =
        avg_aoi(DriftModel{CategoricalPositive{4, 0.1}}, Channel{0.5});
    if (std::abs(anchor_a - 3.0) > 1e-12 || std::abs(anchor_b - 3.0) > 1e-12) {
      pass = false;
      why = "anchors (K=1,p=1) -> " + num(anchor_a) + ", (K=4,p=0.1) -> " + num(anchor_b);
    }
  }
  report(2, "positive-offset mean, three engines", pass, why);
}

void criterion_3() {
  std::ostringstream out;
  std::ostringstream err;
  const int rc = cli::run({"sweep-fig3", "--engines", "analytic"}, out, err);
  bool pass = rc == 0;
  std::string why = pass ? "" : "sweep exited " + std::to_string(rc);
  if (pass) {
    const auto rows = split_lines(out.str());
    std::map<double, double> previous_mean;
    for (std::size_t i = 1; i < rows.size() && pass; ++i) {
      const auto cellv = split_cells(rows[i]);
      const double p = std::stod(cellv[0]);
      const int k = std::stoi(cellv[1]);
      const bool infeasible_expected = static_cast<double>(k) * p > 1.0 + 1e-12;
      const std::string& status = cellv[8];
      if (status != (infeasible_expected ? "infeasible" : "ok")) {
        pass = false;
        why = "K=" + std::to_string(k) + " p=" + num(p) + " flagged " + status;
        break;
      }
      if (!infeasible_expected && p > 0.0) {
        const double mean = std::stod(cellv[3]);
        if (previous_mean.count(p) > 0 && !(mean > previous_mean[p])) {
          pass = false;
          why = "mean not strictly increasing at p=" + num(p) + ", K=" + std::to_string(k);
          break;
        }
        previous_mean[p] = mean;
      }
    }
  }
  report(3, "K-sweep monotonicity and infeasibility flags", pass, why);
}

void criterion_4() {
  const Channel ch{0.5};
  bool pass = true;
  std::string why;

  const double anchor = p_max(2, ch, 3.0);
  if (std::abs(anchor - 1.0 / 3.0) > kPmaxTol) {
    pass = false;
    why = "p_max(K=2, th=3) = " + num(anchor);
  }

  if (pass) {
    for (double th : {3.0, 5.0, 8.0}) {
      double previous = 2.0;
      for (int k = 1; k <= 12; ++k) {
        const double p = p_max(k, ch, th);
        if (p > previous + 1e-15) {
          pass = false;
          why = "p_max increased at K=" + std::to_string(k) + ", th=" + num(th);
          break;
        }
        previous = p;
      }
      if (!pass) break;
    }
  }

  if (pass) {
    // Closed-loop probes at points where the budget is interior (p_max < 1/K):
    // at p = p_max the threshold must hold; 20% above it must be violated.
    const std::pair<int, double> points[] = {{2, 3.0}, {4, 3.0}, {6, 5.0}, {12, 8.0}};
    std::uint64_t index = 0;
    for (const auto& [k, th] : points) {
      const double p = p_max(k, ch, th);
      if (!(p < 1.0 / k)) {
        pass = false;
        why = "expected interior budget at K=" + std::to_string(k) + ", th=" + num(th);
        break;
      }
      const RunStats at_budget = run(DriftModel{CategoricalPositive{k, p}}, ch, kSlots,
                                     kSeed ^ (400 + index++));
      if (!(at_budget.mean_aoi <= th + 3.0 * at_budget.std_error)) {
        pass = false;
        why = "mean " + num(at_budget.mean_aoi) + " misses th=" + num(th) +
              " at the budget (K=" + std::to_string(k) + ")";
        break;
      }
      const double above = std::min(1.0 / k, 1.2 * p);
      const RunStats beyond = run(DriftModel{CategoricalPositive{k, above}}, ch, kSlots,
                                  kSeed ^ (400 + index++));
      if (!(beyond.mean_aoi > th)) {
        pass = false;
        why = "mean " + num(beyond.mean_aoi) + " does not exceed th=" + num(th) +
              " beyond the budget (K=" + std::to_string(k) + ")";
        break;
      }
    }
  }
  report(4, "drift budget arithmetic and closed loop", pass, why);
}

void criterion_5(const std::vector<ThreeWay>& ternary) {
  std::string why;
  bool pass = true;
  for (const ThreeWay& r : ternary) {
    if (!three_way_ok(r, why)) {
      pass = false;
      break;
    }
  }

  if (pass) {
    const double anchor = avg_aoi(DriftModel{Ternary{0.2, 0.5, 0.3}}, Channel{0.5});
    if (std::abs(anchor - 2.3) > 1e-12) {
      pass = false;
      why = "anchor (p1=0.3, ps=0.5) -> " + num(anchor);
    }
  }

  if (pass) {
    // The mean must not depend on the down-step probability: group the grid
    // by (ps, p_up) and bound the spread of simulated means by three combined
    // standard errors of the extreme pair.
    std::map<std::pair<double, double>, std::vector<const ThreeWay*>> groups;
    for (const ThreeWay& r : ternary) {
      const auto& t = std::get<Ternary>(r.model);
      groups[{r.ps, t.p_up}].push_back(&r);
    }
    for (const auto& [key, rows] : groups) {
      if (rows.size() < 2) continue;
      const auto extremes = std::minmax_element(
          rows.begin(), rows.end(), [](const ThreeWay* a, const ThreeWay* b) {
            return a->stats.mean_aoi < b->stats.mean_aoi;
          });
      const ThreeWay* lo = *extremes.first;
      const ThreeWay* hi = *extremes.second;
      const double spread = hi->stats.mean_aoi - lo->stats.mean_aoi;
      const double combined = std::sqrt(hi->stats.std_error * hi->stats.std_error +
                                        lo->stats.std_error * lo->stats.std_error);
      if (!(spread < 3.0 * combined)) {
        pass = false;
        why = "spread " + num(spread) + " at ps=" + num(key.first) +
              ", p1=" + num(key.second) + " exceeds " + num(3.0 * combined);
        break;
      }
      // And the closed form is flat across the group by construction.
      for (const ThreeWay* r : rows) {
        if (std::abs(r->mean_analytic - rows.front()->mean_analytic) > 1e-15) {
          pass = false;
          why = "analytic mean varies with p_down";
          break;
        }
      }
      if (!pass) break;
    }
  }
  report(5, "ternary mean, three engines, down-step independence", pass, why);
}

void criterion_6(const std::vector<ThreeWay>& positive,
                 const std::vector<ThreeWay>& ternary) {
  std::string why;
  bool pass = true;
  for (const std::vector<ThreeWay>* grid : {&positive, &ternary}) {
    for (const ThreeWay& r : *grid) {
      const double tv = empirical_pmf_distance(r.stats, r.pmf);
      if (!(tv < kTvBound)) {
        pass = false;
        why = describe(r.model) + " ps=" + num(r.ps) + ": tv " + num(tv);
        break;
      }
      const double marg = max_marginal_diff(r);
      if (!(marg <= kMarginalTol)) {
        pass = false;
        why = describe(r.model) + " ps=" + num(r.ps) + ": marginal diff " + num(marg);
        break;
      }
    }
    if (!pass) break;
  }
  report(6, "distribution-level agreement", pass, why);
}

void criterion_7(const std::vector<ThreeWay>& positive,
                 const std::vector<ThreeWay>& ternary) {
  std::string why;
  bool pass = true;
  for (const std::vector<ThreeWay>* grid : {&positive, &ternary}) {
    for (const ThreeWay& r : *grid) {
      const double diff = max_joint_diff(r);
      if (!(diff <= kJointEntryTol)) {
        pass = false;
        why = describe(r.model) + " ps=" + num(r.ps) + ": joint diff " + num(diff);
        break;
      }
    }
    if (!pass) break;
  }

  std::string detail;
  if (pass) {
    // Record the one documented disagreement: at (offset -1, age 1) the chain
    // confirms the normalization-consistent entry, not the bare table value.
    const Ternary example{0.2, 0.5, 0.3};
    const Channel ch{0.5};
    const CornerEntryValues corner = ternary_corner_entry(example, ch);
    const auto chain = build_chain(DriftModel{example}, ch,
                                   default_chain_truncation(DriftModel{example}, ch));
    const StationarySolution sol =
        stationary(chain, 1e-12, 1'000'000, SolveMethod::direct_linear);
    const double observed = sol.pi_at(-1, 1);
    if (std::abs(observed - corner.normalized_value) > kJointEntryTol) {
      pass = false;
      why = "corner entry " + num(observed) + " vs oracle " + num(corner.normalized_value);
    } else {
      detail = "corner (k=-1,i=1): chain " + num(observed) + " matches oracle " +
               num(corner.normalized_value) + "; bare table value " +
               num(corner.table_value) + " rejected";
    }
  }
  report(7, "joint-law entrywise agreement", pass, pass ? detail : why);
}

void criterion_8() {
  TraceSchedule schedule;
  schedule.success = {true, false, false, false, true, true};
  schedule.drift = {0, 1, -1, 0, 1, 0};
  const TraceResult trace = run_trace(DriftModel{Ternary{0.25, 0.5, 0.25}}, schedule);
  const std::vector<long> expect_aoi{1, 3, 2, 4, 2, 1};
  const std::vector<long> expect_nodrift{1, 2, 3, 4, 1, 1};
  bool pass = trace.slots.size() == 6 && trace.aoi_nodrift == expect_nodrift;
  std::string why;
  for (std::size_t i = 0; pass && i < 6; ++i) {
    if (trace.slots[i].aoi != expect_aoi[i]) pass = false;
  }
  if (!pass) {
    std::string got;
    for (const SlotRecord& s : trace.slots) got += std::to_string(s.aoi) + " ";
    why = "trace aoi = " + got;
  }
  report(8, "exact six-slot walkthrough", pass, why);
}

void criterion_9() {
  bool pass = true;
  std::string why;
  const std::pair<DriftModel, double> cases[] = {
      {DriftModel{Deterministic{3}}, 0.3},
      {DriftModel{CategoricalPositive{4, 0.1}}, 0.5},
      {DriftModel{Ternary{0.2, 0.5, 0.3}}, 0.5},
  };
  std::uint64_t index = 0;
  for (const auto& [model, ps] : cases) {
    try {
      // run() re-derives the age from the receiver clock and the delivery
      // timestamp on every slot and throws on any disagreement.
      const RunStats stats = run(model, Channel{ps}, kSlotsTwoView, kSeed ^ (900 + index));
      (void)stats;
      // Replay a sampled schedule through the trace path and compare the two
      // views explicitly, slot by slot.
      RngStream rng(kSeed ^ (950 + index));
      TraceSchedule schedule;
      for (long t = 0; t < kSlotsTwoView; ++t) {
        schedule.drift.push_back(sample_drift(model, rng));
        schedule.success.push_back(rng.next_double() < ps);
      }
      const TraceResult trace = run_trace(model, schedule);
      for (const SlotRecord& slot : trace.slots) {
        if (slot.aoi != slot.aoi_timestamp) {
          pass = false;
          why = describe(model) + ": views differ at t=" + std::to_string(slot.t);
          break;
        }
      }
    } catch (const Error& e) {
      pass = false;
      why = describe(model) + ": " + e.what();
    }
    if (!pass) break;
    ++index;
  }
  report(9, "two-view age consistency", pass, why);
}

void criterion_10(const std::vector<ThreeWay>& positive,
                  const std::vector<ThreeWay>& ternary) {
  bool pass = true;
  std::string why;

  // Normalization with analytic tails, and joint-marginal consistency.
  for (const std::vector<ThreeWay>* grid : {&positive, &ternary}) {
    for (const ThreeWay& r : *grid) {
      if (std::abs(r.pmf.total_mass() - 1.0) > kNormTol) {
        pass = false;
        why = describe(r.model) + ": pmf mass " + num(r.pmf.total_mass());
        break;
      }
      for (long i = 1; i <= 60; ++i) {
        double ksum = 0.0;
        for (int k : r.joint.drift_support()) ksum += r.joint.pi(k, i);
        if (std::abs(ksum - r.pmf.prob(i)) > kKsumTol) {
          pass = false;
          why = describe(r.model) + ": joint sum differs at age " + std::to_string(i);
          break;
        }
      }
      if (!pass) break;
    }
    if (!pass) break;
  }

  // Exact floating-point mean identity on the positive grid.
  if (pass) {
    for (const ThreeWay& r : positive) {
      const auto& m = std::get<CategoricalPositive>(r.model);
      if (avg_aoi_positive(m, Channel{r.ps}) !=
          1.0 / r.ps + mean_drift(DriftModel{m})) {
        pass = false;
        why = describe(r.model) + ": mean identity not exact";
        break;
      }
    }
  }

  // Model-reduction chain: ternary with no down-steps == single-step positive;
  // positive with p = 0 == drift-free constant model.
  if (pass) {
    const Channel ch{0.5};
    for (double p1 : {0.0, 0.25, 0.5}) {
      const AoiPmf a = aoi_pmf_ternary(Ternary{0.0, 1.0 - p1, p1}, ch);
      const AoiPmf b = aoi_pmf_positive(CategoricalPositive{1, p1}, ch);
      for (long i = 1; i <= 80; ++i) {
        if (std::abs(a.prob(i) - b.prob(i)) > kReductionTol) {
          pass = false;
          why = "ternary vs single-step positive differ at age " + std::to_string(i) +
                " (p1=" + num(p1) + ")";
          break;
        }
      }
      if (!pass) break;
    }
    if (pass) {
      const AoiPmf c = aoi_pmf_positive(CategoricalPositive{3, 0.0}, ch);
      const AoiPmf d = aoi_pmf_deterministic(0, ch);
      for (long i = 1; i <= 80; ++i) {
        if (std::abs(c.prob(i) - d.prob(i)) > kReductionTol) {
          pass = false;
          why = "zero-probability positive vs drift-free differ at age " +
                std::to_string(i);
          break;
        }
      }
    }
  }

  // Byte-stable CSV under a fixed seed.
  if (pass) {
    const std::vector<std::string> args{"sweep-fig3", "--slots", "2000", "--seed",
                                        "9",          "--K-max", "3"};
    std::ostringstream out_a, err_a, out_b, err_b;
    const int rc_a = cli::run(args, out_a, err_a);
    const int rc_b = cli::run(args, out_b, err_b);
    if (rc_a != 0 || rc_b != 0 || out_a.str() != out_b.str() || out_a.str().empty()) {
      pass = false;
      why = "sweep output not byte-stable";
    }
  }

  report(10, "property pack", pass, why);
}

}  // namespace

int main() {
  std::cout.setf(std::ios::unitbuf);  // keep progress visible under test runners

  // Shared grids evaluated once by all three engines.
  std::vector<ThreeWay> positive;
  std::uint64_t index = 0;
  for (int k : {1, 2, 4}) {
    for (double p : {0.1, 0.5 / k, 1.0 / k}) {
      for (double ps : {0.2, 0.5, 0.8}) {
        positive.push_back(
            evaluate(DriftModel{CategoricalPositive{k, p}}, Channel{ps},
                     kSeed ^ (200 + index++)));
      }
    }
  }
  std::vector<ThreeWay> ternary;
  index = 0;
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; b <= 4 - a; ++b) {
      const double pm = 0.25 * a;
      const double p1 = 0.25 * b;
      for (double ps : {0.2, 0.5, 0.8}) {
        ternary.push_back(evaluate(DriftModel{Ternary{pm, 1.0 - pm - p1, p1}},
                                   Channel{ps}, kSeed ^ (300 + index++)));
      }
    }
  }

  criterion_1();
  criterion_2(positive);
  criterion_3();
  criterion_4();
  criterion_5(ternary);
  criterion_6(positive, ternary);
  criterion_7(positive, ternary);
  criterion_8();
  criterion_9();
  criterion_10(positive, ternary);

  if (failures == 0) {
    std::cout << "acceptance: 10/10 criteria passed\n";
    return 0;
  }
  std::cout << "acceptance: " << (10 - failures) << "/10 criteria passed\n";
  return 1;
}
