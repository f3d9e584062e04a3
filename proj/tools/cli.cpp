#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "aoidrift/analytic.hpp"
#include "aoidrift/dtmc.hpp"
#include "aoidrift/model.hpp"
#include "aoidrift/sim.hpp"
#include "json.hpp"

namespace aoidrift::cli {
namespace {

using nlohmann::ordered_json;

std::string num9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// JSON numbers go through the same 9-significant-digit policy as CSV cells so
// the two formats carry identical values byte for byte.
double round9(double v) { return std::strtod(num9(v).c_str(), nullptr); }

std::string opt_cell(const std::optional<double>& v) { return v ? num9(*v) : ""; }

const char* errc_label(Errc code) {
  switch (code) {
    case Errc::ok: return "ok";
    case Errc::infeasible_drift: return "infeasible";
    case Errc::negative_probability: return "negative probability";
    case Errc::bad_parameter: return "invalid parameter";
    case Errc::truncation_too_small: return "truncation too small";
    case Errc::no_convergence: return "no convergence";
    case Errc::view_mismatch: return "view mismatch";
    case Errc::bad_schedule: return "bad schedule";
  }
  return "error";
}

// Routes report text to --out when given, otherwise to the session stream.
class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::out | std::ios::trunc);
      if (!file_) {
        throw Error(Errc::bad_parameter, "cannot open output file: " + path);
      }
      stream_ = &file_;
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

// One named-field report, rendered as a single CSV row or a JSON object.
class Report {
 public:
  void add(const std::string& name, const std::string& value) {
    names_.push_back(name);
    json_[name] = value;
    cells_.push_back(value);
  }
  void add(const std::string& name, const char* value) { add(name, std::string(value)); }
  void add(const std::string& name, double value) {
    names_.push_back(name);
    json_[name] = round9(value);
    cells_.push_back(num9(value));
  }
  void add_int(const std::string& name, long long value) {
    names_.push_back(name);
    json_[name] = value;
    cells_.push_back(std::to_string(value));
  }
  void add_uint(const std::string& name, unsigned long long value) {
    names_.push_back(name);
    json_[name] = value;
    cells_.push_back(std::to_string(value));
  }

  void render(std::ostream& os, const std::string& format) const {
    if (format == "json") {
      os << json_.dump(2) << "\n";
      return;
    }
    for (std::size_t i = 0; i < names_.size(); ++i) {
      os << names_[i] << (i + 1 < names_.size() ? "," : "\n");
    }
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      os << cells_[i] << (i + 1 < cells_.size() ? "," : "\n");
    }
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::string> cells_;
  ordered_json json_;
};

std::string family_name(const DriftModel& model) {
  struct Visit {
    std::string operator()(const Deterministic&) const { return "deterministic"; }
    std::string operator()(const CategoricalPositive&) const { return "positive"; }
    std::string operator()(const Ternary&) const { return "ternary"; }
  };
  return std::visit(Visit{}, model);
}

void add_params(Report& report, const DriftModel& model) {
  struct Visit {
    Report& report;
    void operator()(const Deterministic& m) const { report.add_int("d", m.drift); }
    void operator()(const CategoricalPositive& m) const {
      report.add_int("K", m.max_drift);
      report.add("p", m.p_each);
    }
    void operator()(const Ternary& m) const {
      report.add("pm", m.p_down);
      report.add("p0", m.p_zero);
      report.add("p1", m.p_up);
    }
  };
  std::visit(Visit{report}, model);
}

// Model selection shared by simulate and dtmc: exactly one of
// --d | --K --p | --pm --p0 --p1.
struct ModelFlags {
  long d = 0;
  int K = 1;
  double p = 0.0;
  double pm = 0.0;
  double p0 = 1.0;
  double p1 = 0.0;
  CLI::Option* opt_d = nullptr;
  CLI::Option* opt_K = nullptr;
  CLI::Option* opt_p = nullptr;
  CLI::Option* opt_pm = nullptr;
  CLI::Option* opt_p0 = nullptr;
  CLI::Option* opt_p1 = nullptr;

  void attach(CLI::App* cmd) {
    opt_d = cmd->add_option("--d", d, "constant offset (deterministic model)");
    opt_K = cmd->add_option("--K", K, "largest offset (positive model)");
    opt_p = cmd->add_option("--p", p, "per-value offset probability (positive model)");
    opt_pm = cmd->add_option("--pm", pm, "P[offset = -1] (ternary model)");
    opt_p0 = cmd->add_option("--p0", p0, "P[offset = 0] (ternary model)");
    opt_p1 = cmd->add_option("--p1", p1, "P[offset = +1] (ternary model)");
  }

  DriftModel build() const {
    const int det = opt_d->count() > 0 ? 1 : 0;
    const int pos = (opt_K->count() > 0 || opt_p->count() > 0) ? 1 : 0;
    const int ter = (opt_pm->count() > 0 || opt_p0->count() > 0 || opt_p1->count() > 0) ? 1 : 0;
    if (det + pos + ter != 1) {
      throw Error(Errc::bad_parameter,
                  "select exactly one model family: --d | --K --p | --pm --p0 --p1");
    }
    if (det == 1) return Deterministic{d};
    if (pos == 1) {
      if (opt_K->count() == 0 || opt_p->count() == 0) {
        throw Error(Errc::bad_parameter, "the positive model needs both --K and --p");
      }
      return CategoricalPositive{K, p};
    }
    if (opt_pm->count() == 0 || opt_p0->count() == 0 || opt_p1->count() == 0) {
      throw Error(Errc::bad_parameter, "the ternary model needs --pm, --p0 and --p1");
    }
    return Ternary{pm, p0, p1};
  }
};

// ---------------------------------------------------------------------------
// Three-way comparison rows shared by the sweeps and verify.

struct CompareRow {
  std::optional<double> mean_analytic;
  std::optional<double> mean_sim;
  std::optional<double> sim_std_error;
  std::optional<double> mean_dtmc;
  std::optional<double> tv_distance;
  std::string status;  // ok | infeasible | mismatch
};

CompareRow compare_point(const DriftModel& model, const Channel& ch, long slots,
                         std::uint64_t seed, bool with_sim, bool with_dtmc,
                         double mean_bias) {
  CompareRow row;
  if (!validate(model).ok) {
    row.status = "infeasible";
    return row;
  }
  row.mean_analytic = avg_aoi(model, ch) + mean_bias;
  bool ok = true;
  if (with_sim) {
    const RunStats stats = aoidrift::run(model, ch, slots, seed);
    row.mean_sim = stats.mean_aoi;
    row.sim_std_error = stats.std_error;
    row.tv_distance = empirical_pmf_distance(stats, aoi_pmf(model, ch));
    ok = ok && std::abs(*row.mean_sim - *row.mean_analytic) <=
                   3.0 * stats.std_error + 0.01 * *row.mean_analytic;
  }
  if (with_dtmc) {
    const auto chain = build_chain(model, ch, default_chain_truncation(model, ch));
    row.mean_dtmc = mean_aoi(stationary(chain));
    ok = ok && std::abs(*row.mean_dtmc - *row.mean_analytic) <= 1e-6;
  }
  row.status = ok ? "ok" : "mismatch";
  return row;
}

void require_unit_interval(double p, const char* name) {
  if (!(p >= 0.0) || !(p <= 1.0)) {
    throw Error(Errc::bad_parameter,
                std::string(name) + " = " + num9(p) + " must lie in [0, 1]");
  }
}

void require_slots(long slots) {
  if (slots < 1) {
    throw Error(Errc::bad_parameter,
                "slots = " + std::to_string(slots) + " must be >= 1");
  }
}

// ---------------------------------------------------------------------------
// Subcommand option blocks. CLI11 keeps raw pointers to these fields, so they
// live in one struct owned by run() for the whole parse.

struct AnalyticFamilyOptions {
  double ps = 0.5;
  bool mean_only = false;
  long pmf_len = 0;
  long i_max = 0;
  std::string format = "csv";
  std::string out_path;
  // family parameters
  long d = 0;
  int K = 1;
  double p = 0.0;
  double pm = 0.0, p0 = 1.0, p1 = 0.0;
};

struct PmaxOptions {
  int K = 1;
  double ps = 0.5;
  double th = 0.0;
  std::string format = "bare";
  std::string out_path;
};

struct SimulateOptions {
  ModelFlags model;
  double ps = 0.5;
  long slots = 1'000'000;
  std::uint64_t seed = 1;
  std::string format = "csv";
  std::string out_path;
};

struct DtmcOptions {
  ModelFlags model;
  double ps = 0.5;
  long i_max = 0;  // 0: default truncation
  std::string method = "power";
  bool dump = false;
  std::string format = "csv";
  std::string out_path;
};

struct Fig3Options {
  int k_min = 1;
  int k_max = 8;
  std::vector<double> p_list{0.1, 0.4, 0.8, 1.0};
  double ps = 0.5;
  long slots = 1'000'000;
  std::uint64_t seed = 1;
  std::string engines = "analytic,sim,dtmc";
  std::string out_path;
};

struct Fig4Options {
  int k_min = 1;
  int k_max = 8;
  std::vector<double> th_list{3.0, 5.0, 8.0};
  double ps = 0.5;
  bool check = false;
  long slots = 1'000'000;
  std::uint64_t seed = 1;
  std::string out_path;
};

struct TraceOptions {
  std::string out_path;
};

struct VerifyOptions {
  std::vector<double> ps_list{0.2, 0.5, 0.8};
  long slots = 1'000'000;
  std::uint64_t seed = 1;
  std::vector<std::string> extra_positive;  // "K,p" entries appended to the grid
  double inject_mean_bias = 0.0;            // hidden negative-control hook
  std::string out_path;
};

// ---------------------------------------------------------------------------
// Subcommand implementations.

void run_analytic_family(const DriftModel& model, const AnalyticFamilyOptions& o,
                         std::ostream& fallback) {
  require_valid(model);
  const Channel ch{o.ps};
  require_positive_success(ch);
  OutputTarget target(o.out_path, fallback);
  std::ostream& os = target.stream();

  if (o.mean_only) {
    os << num9(avg_aoi(model, ch)) << "\n";
    return;
  }
  if (o.pmf_len > 0) {
    if (o.pmf_len > kTruncationCap) {
      throw Error(Errc::bad_parameter,
                  "pmf length " + std::to_string(o.pmf_len) + " exceeds " +
                      std::to_string(kTruncationCap));
    }
    const AoiPmf pmf = o.i_max > 0 ? aoi_pmf(model, ch, o.i_max) : aoi_pmf(model, ch);
    if (o.format == "json") {
      ordered_json j;
      j["family"] = family_name(model);
      j["model"] = describe(model);
      j["ps"] = round9(o.ps);
      ordered_json rows = ordered_json::array();
      for (long i = 1; i <= o.pmf_len; ++i) {
        rows.push_back({{"i", i}, {"prob", round9(pmf.prob(i))}});
      }
      j["pmf"] = std::move(rows);
      os << j.dump(2) << "\n";
    } else {
      os << "i,prob\n";
      for (long i = 1; i <= o.pmf_len; ++i) {
        os << i << ',' << num9(pmf.prob(i)) << "\n";
      }
    }
    return;
  }
  Report report;
  report.add("family", family_name(model));
  add_params(report, model);
  report.add("ps", o.ps);
  report.add("mean_aoi", avg_aoi(model, ch));
  report.render(os, o.format);
}

void run_pmax(const PmaxOptions& o, std::ostream& fallback) {
  const Channel ch{o.ps};
  const double value = p_max(o.K, ch, o.th);
  OutputTarget target(o.out_path, fallback);
  std::ostream& os = target.stream();
  if (o.format == "bare") {
    os << num9(value) << "\n";
    return;
  }
  Report report;
  report.add_int("K", o.K);
  report.add("ps", o.ps);
  report.add("th", o.th);
  report.add("p_max", value);
  report.render(os, o.format);
}

void run_simulate(const SimulateOptions& o, std::ostream& fallback) {
  const DriftModel model = o.model.build();
  require_valid(model);
  const Channel ch{o.ps};
  require_positive_success(ch);
  require_slots(o.slots);

  const RunStats stats = aoidrift::run(model, ch, o.slots, o.seed);
  const double mean_analytic = avg_aoi(model, ch);
  const double tv = empirical_pmf_distance(stats, aoi_pmf(model, ch));

  Report report;
  report.add("family", family_name(model));
  add_params(report, model);
  report.add("ps", o.ps);
  report.add_int("slots", stats.n_slots);
  report.add_uint("seed", stats.seed);
  report.add("mean_aoi", stats.mean_aoi);
  report.add("std_error", stats.std_error);
  report.add_int("max_aoi", stats.max_aoi);
  report.add_int("overflow_count", stats.overflow_count);
  report.add("mean_analytic", mean_analytic);
  report.add("tv_distance", tv);
  OutputTarget target(o.out_path, fallback);
  report.render(target.stream(), o.format);
}

void run_dtmc(const DtmcOptions& o, std::ostream& fallback) {
  const DriftModel model = o.model.build();
  require_valid(model);
  const Channel ch{o.ps};
  require_positive_success(ch);

  const long i_max = o.i_max > 0 ? o.i_max : default_chain_truncation(model, ch);
  const auto chain = build_chain(model, ch, i_max);
  const SolveMethod method =
      o.method == "direct" ? SolveMethod::direct_linear : SolveMethod::power_iteration;
  const StationarySolution sol = stationary(chain, 1e-12, 1'000'000, method);

  OutputTarget target(o.out_path, fallback);
  std::ostream& os = target.stream();
  if (o.dump) {
    os << "k,i,pi\n";
    for (std::size_t s = 0; s < sol.states.size(); ++s) {
      os << sol.states[s].drift << ',' << sol.states[s].aoi << ','
         << num9(sol.pi[s]) << "\n";
    }
    return;
  }

  Report report;
  report.add("family", family_name(model));
  add_params(report, model);
  report.add("ps", o.ps);
  report.add_int("i_max", i_max);
  report.add_int("states", static_cast<long long>(sol.states.size()));
  report.add("method", o.method == "direct" ? "direct" : "power");
  report.add_int("iterations", sol.iterations);
  report.add("convergence_error", sol.convergence_error);
  report.add("top_bucket_mass", sol.top_bucket_mass);
  report.add("residual_bound", sol.residual_bound);
  report.add("mean_aoi", mean_aoi(sol));
  report.add("mean_analytic", avg_aoi(model, ch));
  if (const auto* t = std::get_if<Ternary>(&model)) {
    const CornerEntryValues corner = ternary_corner_entry(*t, ch);
    report.add("corner_table_value", corner.table_value);
    report.add("corner_oracle_value", corner.normalized_value);
    report.add("corner_dtmc_value", sol.pi_at(-1, 1));
  }
  report.render(os, o.format);
}

void run_trace_fig2(const TraceOptions& o, std::ostream& fallback) {
  // Fixed six-slot walkthrough: channel outcomes and per-slot offsets chosen
  // so both trajectories (with and without offsets) are exercised.
  TraceSchedule schedule;
  schedule.success = {true, false, false, false, true, true};
  schedule.drift = {0, 1, -1, 0, 1, 0};
  const Ternary model{0.25, 0.5, 0.25};  // any full-support ternary model replays it
  const TraceResult trace = run_trace(DriftModel{model}, schedule);

  OutputTarget target(o.out_path, fallback);
  std::ostream& os = target.stream();
  os << "t,h,delta,aoi,aoi_nodrift\n";
  for (std::size_t i = 0; i < trace.slots.size(); ++i) {
    const SlotRecord& slot = trace.slots[i];
    os << slot.t << ',' << (slot.success ? 1 : 0) << ',' << slot.drift << ','
       << slot.aoi << ',' << trace.aoi_nodrift[i] << "\n";
  }
}

void run_sweep_fig3(const Fig3Options& o, std::ostream& fallback) {
  if (o.k_min < 1 || o.k_max < o.k_min) {
    throw Error(Errc::bad_parameter, "malformed K range: K-min = " +
                                         std::to_string(o.k_min) + ", K-max = " +
                                         std::to_string(o.k_max));
  }
  if (o.p_list.empty()) {
    throw Error(Errc::bad_parameter, "the p grid must not be empty");
  }
  for (double p : o.p_list) require_unit_interval(p, "p");
  const Channel ch{o.ps};
  require_positive_success(ch);
  require_slots(o.slots);
  const bool with_sim = o.engines.find("sim") != std::string::npos;
  const bool with_dtmc = o.engines.find("dtmc") != std::string::npos;

  std::vector<double> ps_sorted = o.p_list;
  std::sort(ps_sorted.begin(), ps_sorted.end());

  OutputTarget target(o.out_path, fallback);
  std::ostream& os = target.stream();
  os << "p,K,ps,mean_analytic,mean_sim,sim_std_error,mean_dtmc,tv_distance,status\n";
  std::uint64_t row_index = 0;
  for (double p : ps_sorted) {
    for (int k = o.k_min; k <= o.k_max; ++k) {
      const DriftModel model{CategoricalPositive{k, p}};
      const CompareRow row = compare_point(model, ch, o.slots, o.seed ^ row_index,
                                           with_sim, with_dtmc, 0.0);
      os << num9(p) << ',' << k << ',' << num9(o.ps) << ','
         << opt_cell(row.mean_analytic) << ',' << opt_cell(row.mean_sim) << ','
         << opt_cell(row.sim_std_error) << ',' << opt_cell(row.mean_dtmc) << ','
         << opt_cell(row.tv_distance) << ',' << row.status << "\n";
      ++row_index;
    }
  }
}

void run_sweep_fig4(const Fig4Options& o, std::ostream& fallback) {
  if (o.k_min < 1 || o.k_max < o.k_min) {
    throw Error(Errc::bad_parameter, "malformed K range: K-min = " +
                                         std::to_string(o.k_min) + ", K-max = " +
                                         std::to_string(o.k_max));
  }
  if (o.th_list.empty()) {
    throw Error(Errc::bad_parameter, "the threshold grid must not be empty");
  }
  for (double th : o.th_list) {
    if (!(th > 0.0) || !std::isfinite(th)) {
      throw Error(Errc::bad_parameter, "th = " + num9(th) + " must be positive and finite");
    }
  }
  const Channel ch{o.ps};
  require_positive_success(ch);
  require_slots(o.slots);

  std::vector<double> th_sorted = o.th_list;
  std::sort(th_sorted.begin(), th_sorted.end());

  OutputTarget target(o.out_path, fallback);
  std::ostream& os = target.stream();
  os << "th,K,ps,p_max,mean_sim,sim_std_error,status\n";
  std::uint64_t row_index = 0;
  for (double th : th_sorted) {
    for (int k = o.k_min; k <= o.k_max; ++k) {
      const double p = p_max(k, ch, th);
      std::optional<double> mean_sim;
      std::optional<double> std_error;
      std::string status = "ok";
      if (o.check) {
        if (o.ps * th < 1.0) {
          // Even a drift-free system misses this threshold: 1/ps > th.
          status = "infeasible";
        } else {
          const DriftModel model{CategoricalPositive{k, p}};
          const RunStats stats = aoidrift::run(model, ch, o.slots, o.seed ^ row_index);
          mean_sim = stats.mean_aoi;
          std_error = stats.std_error;
          status = stats.mean_aoi <= th + 3.0 * stats.std_error ? "ok" : "mismatch";
        }
      }
      os << num9(th) << ',' << k << ',' << num9(o.ps) << ',' << num9(p) << ','
         << opt_cell(mean_sim) << ',' << opt_cell(std_error) << ',' << status << "\n";
      ++row_index;
    }
  }
}

struct VerifyPoint {
  DriftModel model;
  double ps;
};

std::vector<VerifyPoint> verify_grid(const VerifyOptions& o) {
  for (double ps : o.ps_list) require_unit_interval(ps, "ps");
  std::vector<VerifyPoint> grid;
  for (long d : {0L, 1L, 5L}) {
    for (double ps : o.ps_list) grid.push_back({Deterministic{d}, ps});
  }
  for (int k : {1, 2, 4}) {
    const double p_values[] = {0.0, 0.1, 0.5 / k, 1.0 / k};
    for (double p : p_values) {
      for (double ps : o.ps_list) grid.push_back({CategoricalPositive{k, p}, ps});
    }
  }
  // Ternary simplex with step 0.25.
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; b <= 4 - a; ++b) {
      const double pm = 0.25 * a;
      const double p1 = 0.25 * b;
      const double p0 = 1.0 - pm - p1;
      for (double ps : o.ps_list) grid.push_back({Ternary{pm, p0, p1}, ps});
    }
  }
  for (const std::string& entry : o.extra_positive) {
    const auto comma = entry.find(',');
    int k = 0;
    double p = -1.0;
    bool parsed = false;
    if (comma != std::string::npos) {
      try {
        std::size_t used_k = 0;
        std::size_t used_p = 0;
        const std::string k_text = entry.substr(0, comma);
        const std::string p_text = entry.substr(comma + 1);
        k = std::stoi(k_text, &used_k);
        p = std::stod(p_text, &used_p);
        parsed = used_k == k_text.size() && used_p == p_text.size();
      } catch (const std::exception&) {
        parsed = false;
      }
    }
    if (!parsed) {
      throw Error(Errc::bad_parameter,
                  "cannot parse --positive-point '" + entry + "'; expected K,p");
    }
    for (double ps : o.ps_list) grid.push_back({CategoricalPositive{k, p}, ps});
  }
  return grid;
}

int run_verify(const VerifyOptions& o, std::ostream& fallback) {
  require_slots(o.slots);
  const std::vector<VerifyPoint> grid = verify_grid(o);

  ordered_json rows = ordered_json::array();
  long n_ok = 0;
  long n_infeasible = 0;
  long n_mismatch = 0;
  for (std::size_t index = 0; index < grid.size(); ++index) {
    const VerifyPoint& point = grid[index];
    const Channel ch{point.ps};
    require_positive_success(ch);
    const std::uint64_t seed = o.seed ^ static_cast<std::uint64_t>(index);
    const CompareRow row = compare_point(point.model, ch, o.slots, seed, true, true,
                                         o.inject_mean_bias);

    ordered_json j;
    j["family"] = family_name(point.model);
    j["model"] = describe(point.model);
    struct Params {
      ordered_json& j;
      void operator()(const Deterministic& m) const { j["d"] = m.drift; }
      void operator()(const CategoricalPositive& m) const {
        j["K"] = m.max_drift;
        j["p"] = round9(m.p_each);
      }
      void operator()(const Ternary& m) const {
        j["pm"] = round9(m.p_down);
        j["p0"] = round9(m.p_zero);
        j["p1"] = round9(m.p_up);
      }
    };
    std::visit(Params{j}, point.model);
    j["ps"] = round9(point.ps);
    j["seed"] = seed;
    if (row.mean_analytic) j["mean_analytic"] = round9(*row.mean_analytic);
    if (row.mean_sim) j["mean_sim"] = round9(*row.mean_sim);
    if (row.sim_std_error) j["sim_std_error"] = round9(*row.sim_std_error);
    if (row.mean_dtmc) j["mean_dtmc"] = round9(*row.mean_dtmc);
    if (row.tv_distance) j["tv_distance"] = round9(*row.tv_distance);
    j["status"] = row.status;
    rows.push_back(std::move(j));

    if (row.status == "ok") ++n_ok;
    if (row.status == "infeasible") ++n_infeasible;
    if (row.status == "mismatch") ++n_mismatch;
  }

  ordered_json report;
  report["slots"] = o.slots;
  report["seed"] = o.seed;
  report["summary"] = {{"rows", static_cast<long>(grid.size())},
                       {"ok", n_ok},
                       {"infeasible", n_infeasible},
                       {"mismatch", n_mismatch}};
  {
    // The joint-law disagreement at (offset -1, age 1): the chain oracle
    // confirms the normalization-consistent value, not the bare table entry.
    const Ternary example{0.25, 0.5, 0.25};
    const Channel ch{0.5};
    const CornerEntryValues corner = ternary_corner_entry(example, ch);
    report["ternary_corner_note"] = {
        {"state", "(offset -1, age 1)"},
        {"example_model", describe(DriftModel{example})},
        {"example_ps", 0.5},
        {"table_value", round9(corner.table_value)},
        {"oracle_value", round9(corner.normalized_value)},
        {"detail",
         "the stationary entry keeps the clamped failure inflow, so the joint "
         "law uses p_down*ps*(1 + pf*(1 - p_down)) instead of p_down*ps"}};
  }
  report["rows"] = std::move(rows);

  OutputTarget target(o.out_path, fallback);
  target.stream() << report.dump(2) << "\n";
  return n_mismatch > 0 ? 1 : 0;
}

// CLI11 consults a config option only on the root application object, so the
// per-subcommand `--config` files are expanded by hand before parsing: each
// flat `key = value` line is appended as `--key=value`, skipping keys already
// present on the command line so explicit flags keep precedence.
std::vector<std::string> expand_config_args(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (a.rfind("--config=", 0) == 0) {
      path = a.substr(std::string("--config=").size());
    }
  }
  if (path.empty()) return args;

  std::ifstream file(path);
  if (!file) throw Error(Errc::bad_parameter, "cannot open config file " + path);

  const auto trim = [](const std::string& s) {
    const char* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
  };

  std::map<std::string, std::string> entries;  // last assignment per key wins
  std::vector<std::string> order;
  std::string line;
  long line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::bad_parameter,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(text.substr(0, eq));
    std::string value = trim(text.substr(eq + 1));
    if (key.empty()) {
      throw Error(Errc::bad_parameter,
                  "config line " + std::to_string(line_no) + ": empty key");
    }
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    if (entries.find(key) == entries.end()) order.push_back(key);
    entries[key] = value;
  }

  std::vector<std::string> expanded = args;
  for (const std::string& key : order) {
    const std::string flag = "--" + key;
    const std::string assigned = flag + "=";
    const bool explicit_set =
        std::any_of(args.begin(), args.end(), [&](const std::string& a) {
          return a == flag || a.rfind(assigned, 0) == 0;
        });
    if (!explicit_set) expanded.push_back(flag + "=" + entries[key]);
  }
  return expanded;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"age-of-information analysis for status updates under clock drift"};
  app.require_subcommand(1);

  int rc = 0;
  std::string config_sink;  // the file is expanded before parsing; see above
  const auto attach_config = [&config_sink](CLI::App* cmd) {
    cmd->add_option("--config", config_sink,
                    "flat key = value option file (flags take precedence)");
  };

  // --- analytic ------------------------------------------------------------
  CLI::App* analytic = app.add_subcommand(
      "analytic", "closed-form mean age, age pmf, and drift budget");
  analytic->require_subcommand(1);

  AnalyticFamilyOptions an_det, an_pos, an_ter;
  PmaxOptions an_pmax;

  const auto attach_family_common = [&attach_config](CLI::App* cmd,
                                                     AnalyticFamilyOptions& o) {
    cmd->add_option("--ps", o.ps, "per-slot delivery probability")->capture_default_str();
    cmd->add_flag("--mean", o.mean_only, "print only the mean age");
    cmd->add_option("--pmf", o.pmf_len, "print the age pmf for ages 1..N");
    cmd->add_option("--imax", o.i_max, "truncation index for the pmf prefix");
    cmd->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd->add_option("--out", o.out_path, "write output to this file instead of stdout");
    attach_config(cmd);
  };

  CLI::App* an_det_cmd =
      analytic->add_subcommand("deterministic", "constant offset model");
  an_det_cmd->add_option("--d", an_det.d, "constant offset in slots")->required();
  attach_family_common(an_det_cmd, an_det);
  an_det_cmd->callback(
      [&] { run_analytic_family(DriftModel{Deterministic{an_det.d}}, an_det, out); });

  CLI::App* an_pos_cmd =
      analytic->add_subcommand("positive", "nonnegative categorical offset model");
  an_pos_cmd->add_option("--K", an_pos.K, "largest offset")->required();
  an_pos_cmd->add_option("--p", an_pos.p, "per-value offset probability")->required();
  attach_family_common(an_pos_cmd, an_pos);
  an_pos_cmd->callback([&] {
    run_analytic_family(DriftModel{CategoricalPositive{an_pos.K, an_pos.p}}, an_pos, out);
  });

  CLI::App* an_ter_cmd = analytic->add_subcommand("ternary", "offset model on {-1, 0, +1}");
  an_ter_cmd->add_option("--pm", an_ter.pm, "P[offset = -1]")->required();
  an_ter_cmd->add_option("--p0", an_ter.p0, "P[offset = 0]")->required();
  an_ter_cmd->add_option("--p1", an_ter.p1, "P[offset = +1]")->required();
  attach_family_common(an_ter_cmd, an_ter);
  an_ter_cmd->callback([&] {
    run_analytic_family(DriftModel{Ternary{an_ter.pm, an_ter.p0, an_ter.p1}}, an_ter, out);
  });

  CLI::App* an_pmax_cmd = analytic->add_subcommand(
      "pmax", "largest per-value drift probability meeting a mean-age threshold");
  an_pmax_cmd->add_option("--K", an_pmax.K, "largest offset")->required();
  an_pmax_cmd->add_option("--th", an_pmax.th, "mean-age threshold")->required();
  an_pmax_cmd->add_option("--ps", an_pmax.ps, "per-slot delivery probability")
      ->capture_default_str();
  an_pmax_cmd->add_option("--format", an_pmax.format, "output format")
      ->check(CLI::IsMember({"bare", "csv", "json"}))
      ->capture_default_str();
  an_pmax_cmd->add_option("--out", an_pmax.out_path, "write output to this file");
  attach_config(an_pmax_cmd);
  an_pmax_cmd->callback([&] { run_pmax(an_pmax, out); });

  // --- simulate --------------------------------------------------------------
  SimulateOptions sim_opts;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "seeded slot-level simulation");
  sim_opts.model.attach(sim_cmd);
  sim_cmd->add_option("--ps", sim_opts.ps, "per-slot delivery probability")
      ->capture_default_str();
  sim_cmd->add_option("--slots", sim_opts.slots, "number of simulated slots")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim_opts.seed, "rng seed")->capture_default_str();
  sim_cmd->add_option("--format", sim_opts.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  sim_cmd->add_option("--out", sim_opts.out_path, "write output to this file");
  attach_config(sim_cmd);
  sim_cmd->callback([&] { run_simulate(sim_opts, out); });

  // --- dtmc ------------------------------------------------------------------
  DtmcOptions dtmc_opts;
  CLI::App* dtmc_cmd =
      app.add_subcommand("dtmc", "joint-chain oracle: stationary solve of (offset, age)");
  dtmc_opts.model.attach(dtmc_cmd);
  dtmc_cmd->add_option("--ps", dtmc_opts.ps, "per-slot delivery probability")
      ->capture_default_str();
  dtmc_cmd->add_option("--imax", dtmc_opts.i_max, "age truncation (0 = automatic)")
      ->capture_default_str();
  dtmc_cmd->add_option("--method", dtmc_opts.method, "stationary solver")
      ->check(CLI::IsMember({"power", "direct"}))
      ->capture_default_str();
  dtmc_cmd->add_flag("--dump", dtmc_opts.dump, "print the stationary vector as k,i,pi rows");
  dtmc_cmd->add_option("--format", dtmc_opts.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  dtmc_cmd->add_option("--out", dtmc_opts.out_path, "write output to this file");
  attach_config(dtmc_cmd);
  dtmc_cmd->callback([&] { run_dtmc(dtmc_opts, out); });

  // --- trace-fig2 --------------------------------------------------------------
  TraceOptions trace_opts;
  CLI::App* trace_cmd = app.add_subcommand(
      "trace-fig2", "exact six-slot walkthrough trace of the drift recursion");
  trace_cmd->add_option("--out", trace_opts.out_path, "write output to this file");
  trace_cmd->callback([&] { run_trace_fig2(trace_opts, out); });

  // --- sweep-fig3 ---------------------------------------------------------------
  Fig3Options fig3_opts;
  CLI::App* fig3_cmd = app.add_subcommand(
      "sweep-fig3", "mean age as a function of the largest offset, three engines");
  fig3_cmd->add_option("--K-min", fig3_opts.k_min, "smallest K")->capture_default_str();
  fig3_cmd->add_option("--K-max", fig3_opts.k_max, "largest K")->capture_default_str();
  fig3_cmd->add_option("--p", fig3_opts.p_list, "per-value probability grid")
      ->capture_default_str();
  fig3_cmd->add_option("--ps", fig3_opts.ps, "per-slot delivery probability")
      ->capture_default_str();
  fig3_cmd->add_option("--slots", fig3_opts.slots, "simulated slots per row")
      ->capture_default_str();
  fig3_cmd->add_option("--seed", fig3_opts.seed, "base seed; row seed = seed XOR row index")
      ->capture_default_str();
  fig3_cmd->add_option("--engines", fig3_opts.engines,
                       "comma-separated engines: analytic,sim,dtmc")
      ->capture_default_str();
  fig3_cmd->add_option("--out", fig3_opts.out_path, "write output to this file");
  attach_config(fig3_cmd);
  fig3_cmd->callback([&] { run_sweep_fig3(fig3_opts, out); });

  // --- sweep-fig4 ----------------------------------------------------------------
  Fig4Options fig4_opts;
  CLI::App* fig4_cmd = app.add_subcommand(
      "sweep-fig4", "drift budget p_max as a function of the largest offset");
  fig4_cmd->add_option("--K-min", fig4_opts.k_min, "smallest K")->capture_default_str();
  fig4_cmd->add_option("--K-max", fig4_opts.k_max, "largest K")->capture_default_str();
  fig4_cmd->add_option("--th", fig4_opts.th_list, "mean-age threshold grid")
      ->capture_default_str();
  fig4_cmd->add_option("--ps", fig4_opts.ps, "per-slot delivery probability")
      ->capture_default_str();
  fig4_cmd->add_flag("--check", fig4_opts.check,
                     "simulate at p = p_max and confirm the threshold holds");
  fig4_cmd->add_option("--slots", fig4_opts.slots, "simulated slots per checked row")
      ->capture_default_str();
  fig4_cmd->add_option("--seed", fig4_opts.seed, "base seed; row seed = seed XOR row index")
      ->capture_default_str();
  fig4_cmd->add_option("--out", fig4_opts.out_path, "write output to this file");
  attach_config(fig4_cmd);
  fig4_cmd->callback([&] { run_sweep_fig4(fig4_opts, out); });

  // --- verify ------------------------------------------------------------------
  VerifyOptions verify_opts;
  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "three-way comparison over the standard model grid, JSON report");
  verify_cmd->add_option("--ps", verify_opts.ps_list, "delivery probability grid")
      ->capture_default_str();
  verify_cmd->add_option("--slots", verify_opts.slots, "simulated slots per row")
      ->capture_default_str();
  verify_cmd->add_option("--seed", verify_opts.seed,
                         "base seed; row seed = seed XOR row index")
      ->capture_default_str();
  verify_cmd->add_option("--positive-point", verify_opts.extra_positive,
                         "extra positive-model grid points as K,p");
  verify_cmd->add_option("--inject-mean-bias", verify_opts.inject_mean_bias,
                         "negative-control bias added to every analytic mean")
      ->group("");
  verify_cmd->add_option("--out", verify_opts.out_path, "write the JSON report to this file");
  attach_config(verify_cmd);
  verify_cmd->callback([&] { rc = run_verify(verify_opts, out); });

  std::vector<std::string> expanded;
  try {
    expanded = expand_config_args(args);
  } catch (const Error& e) {
    err << "error: " << errc_label(e.code()) << ": " << e.what() << "\n";
    return 2;
  }

  std::vector<const char*> argv;
  argv.reserve(expanded.size() + 1);
  argv.push_back("aoidrift");
  for (const std::string& a : expanded) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    const CLI::App* scope = &app;
    for (;;) {
      const auto parsed = scope->get_subcommands();
      if (parsed.empty()) break;
      scope = parsed.front();
    }
    out << scope->help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << errc_label(e.code()) << ": " << e.what() << "\n";
    return 2;
  }
  return rc;
}

}  // namespace aoidrift::cli
