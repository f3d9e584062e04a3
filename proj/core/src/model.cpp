#include "aoidrift/model.hpp"

#include <cmath>
#include <cstdio>
#include <variant>

namespace aoidrift {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

ValidationResult pass() { return {true, Errc::ok, ""}; }

ValidationResult fail(Errc code, std::string message) {
  return {false, code, std::move(message)};
}

// Accepts values inside [0, 1] with kProbTolerance slack on both ends.
ValidationResult check_probability(double p, const char* name) {
  if (!std::isfinite(p)) {
    return fail(Errc::bad_parameter, std::string(name) + " is not finite");
  }
  if (p < -kProbTolerance) {
    return fail(Errc::negative_probability,
                std::string(name) + " = " + num(p) + " is negative");
  }
  if (p > 1.0 + kProbTolerance) {
    return fail(Errc::bad_parameter,
                std::string(name) + " = " + num(p) + " exceeds 1");
  }
  return pass();
}

}  // namespace

ValidationResult validate(const Channel& ch) {
  return check_probability(ch.success_prob, "success_prob");
}

ValidationResult validate(const DriftModel& model) {
  struct Check {
    ValidationResult operator()(const Deterministic& m) const {
      if (m.drift < 0) {
        return fail(Errc::bad_parameter,
                    "deterministic drift = " + std::to_string(m.drift) +
                        " must be nonnegative");
      }
      return pass();
    }
    ValidationResult operator()(const CategoricalPositive& m) const {
      if (m.max_drift < 1) {
        return fail(Errc::bad_parameter,
                    "max_drift = " + std::to_string(m.max_drift) + " must be >= 1");
      }
      if (auto r = check_probability(m.p_each, "p_each"); !r.ok) return r;
      // p_zero < 0 is the K*p > 1 infeasibility.
      if (m.p_zero() < -kProbTolerance) {
        return fail(Errc::infeasible_drift,
                    "p_zero = 1 - " + std::to_string(m.max_drift) + "*" +
                        num(m.p_each) + " = " + num(m.p_zero()) + " is negative");
      }
      return pass();
    }
    ValidationResult operator()(const Ternary& m) const {
      if (auto r = check_probability(m.p_down, "p_down"); !r.ok) return r;
      if (auto r = check_probability(m.p_zero, "p_zero"); !r.ok) return r;
      if (auto r = check_probability(m.p_up, "p_up"); !r.ok) return r;
      const double sum = m.p_down + m.p_zero + m.p_up;
      if (std::abs(sum - 1.0) > kProbTolerance) {
        return fail(Errc::infeasible_drift,
                    "ternary probabilities sum to " + num(sum) + ", expected 1");
      }
      return pass();
    }
  };
  return std::visit(Check{}, model);
}

void require_valid(const Channel& ch) {
  if (auto r = validate(ch); !r.ok) throw Error(r.code, r.message);
}

void require_valid(const DriftModel& model) {
  if (auto r = validate(model); !r.ok) throw Error(r.code, r.message);
}

void require_positive_success(const Channel& ch) {
  require_valid(ch);
  if (!(ch.success_prob > 0.0)) {
    throw Error(Errc::bad_parameter,
                "success_prob = " + num(ch.success_prob) +
                    "; a positive success probability is required");
  }
}

std::map<int, double> drift_pmf(const DriftModel& model) {
  require_valid(model);
  struct Pmf {
    std::map<int, double> operator()(const Deterministic& m) const {
      return {{static_cast<int>(m.drift), 1.0}};
    }
    std::map<int, double> operator()(const CategoricalPositive& m) const {
      std::map<int, double> pmf{{0, m.p_zero()}};
      for (int k = 1; k <= m.max_drift; ++k) pmf[k] = m.p_each;
      return pmf;
    }
    std::map<int, double> operator()(const Ternary& m) const {
      return {{-1, m.p_down}, {0, m.p_zero}, {1, m.p_up}};
    }
  };
  return std::visit(Pmf{}, model);
}

double mean_drift(const DriftModel& model) {
  require_valid(model);
  struct Mean {
    double operator()(const Deterministic& m) const {
      return static_cast<double>(m.drift);
    }
    double operator()(const CategoricalPositive& m) const {
      // Integer triangle number first: keeps p * K(K+1)/2 exact when the
      // product is representable (e.g. p = 1/3, K = 2 gives exactly 1).
      const long triangle =
          static_cast<long>(m.max_drift) * (m.max_drift + 1) / 2;
      return m.p_each * static_cast<double>(triangle);
    }
    double operator()(const Ternary& m) const { return m.p_up - m.p_down; }
  };
  return std::visit(Mean{}, model);
}

std::string describe(const DriftModel& model) {
  struct Name {
    std::string operator()(const Deterministic& m) const {
      return "deterministic(d=" + std::to_string(m.drift) + ")";
    }
    std::string operator()(const CategoricalPositive& m) const {
      return "positive(K=" + std::to_string(m.max_drift) + ",p=" + num(m.p_each) + ")";
    }
    std::string operator()(const Ternary& m) const {
      return "ternary(pm=" + num(m.p_down) + ",p0=" + num(m.p_zero) +
             ",p1=" + num(m.p_up) + ")";
    }
  };
  return std::visit(Name{}, model);
}

}  // namespace aoidrift
