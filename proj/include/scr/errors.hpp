#pragma once

#include <stdexcept>
#include <string>

namespace scr {

// Malformed or invalid input data (missing column, bad cell, bad exposure).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller passed arguments that violate an operation's precondition.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A factorization or optimizer could not produce a finite answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// weighted_mle was asked to fit a group with zero total weight.
class DegenerateGroupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Too many parametric-bootstrap replicates failed to converge.
class BootstrapError : public std::runtime_error {
 public:
  BootstrapError(const std::string& what, int dropped, int total)
      : std::runtime_error(what), dropped_(dropped), total_(total) {}
  int dropped() const { return dropped_; }
  int total() const { return total_; }

 private:
  int dropped_;
  int total_;
};

}  // namespace scr
