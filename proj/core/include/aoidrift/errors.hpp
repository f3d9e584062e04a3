#pragma once

#include <stdexcept>
#include <string>

namespace aoidrift {

// Failure categories surfaced by the library. Callers switch on the code
// rather than parsing messages.
enum class Errc {
  ok,
  infeasible_drift,      // drift probabilities do not form a distribution
  negative_probability,
  bad_parameter,
  truncation_too_small,
  no_convergence,
  view_mismatch,         // recursion and timestamp AoI disagree; indicates a bug
  bad_schedule,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace aoidrift
