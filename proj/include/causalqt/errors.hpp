#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace causalqt {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// Shape mismatch: operator dimension vs site dimension, amplitude vector
// length vs total Hilbert-space dimension, out-of-range site index.
class DimensionError : public Error {
public:
  using Error::Error;
};

// Parameter outside its documented range (eta, eps, trial counts, ...).
class ParamError : public Error {
public:
  using Error::Error;
};

// Input file or config rejected before it reaches the engines.  `path`
// addresses the offending field, e.g. "events[2].kraus.softened.eta".
class ValidationError : public Error {
public:
  ValidationError(std::string field_path, const std::string& message)
      : Error(field_path.empty() ? message : field_path + ": " + message),
        path(std::move(field_path)) {}

  std::string path;
};

// Exact enumeration would exceed the outcome-tuple budget.
class BudgetError : public Error {
public:
  using Error::Error;
};

// A chain of reductions annihilated the state, so no normalized
// post-reduction state exists and later outcome probabilities are
// undefined.  `chain` lists the (event id, outcome label) pairs that were
// applied, ending with the annihilating one.
class ZeroNormState : public Error {
public:
  using Chain = std::vector<std::pair<int, int>>;

  explicit ZeroNormState(Chain applied = {})
      : Error(describe(applied)), chain(std::move(applied)) {}

  Chain chain;

private:
  static std::string describe(const Chain& applied) {
    if (applied.empty()) return "state norm fell below eps_zero";
    std::string msg = "state annihilated by reduction chain:";
    for (const auto& [event, outcome] : applied) {
      msg += " (event " + std::to_string(event) + ", outcome " +
             std::to_string(outcome) + ")";
    }
    return msg;
  }
};

}  // namespace causalqt
