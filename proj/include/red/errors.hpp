#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace red {

// Raised when a constrained sample has no probability mass on any allowed
// token. Probe code treats this as an abstain, not a crash.
class ZeroMassError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric argument outside the mathematical domain of an operation
// (odds ratio at p in {0,1}, binary KL at the boundary, etc.).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation requires full-vocabulary distributions but the backend only
// exposes top-k log-probabilities.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backend transport or protocol failure, surfaced verbatim.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Pair scorer failed or returned an out-of-range value; carries the pair.
class ScorerError : public std::runtime_error {
 public:
  ScorerError(const std::string& what, int i, int j)
      : std::runtime_error(what + " (pair i=" + std::to_string(i) +
                           ", j=" + std::to_string(j) + ")"),
        i_(i),
        j_(j) {}
  int parent_candidate() const { return i_; }
  int child() const { return j_; }

 private:
  int i_;
  int j_;
};

// Caller passed a (first, subs) pair that is not componentwise dominated.
class DominanceViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed line in a trace / annotation / config stream; carries the
// 1-based line number of the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace red
