#pragma once

#include <stdexcept>
#include <string>

namespace bregman {

// Kernel/problem domain violations (e.g. prox center on the orthant boundary).
struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible controller/kernel/problem combination detected before a run.
struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Consecutive iterates collapsed: local estimates are undefined.
struct degenerate_pair_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scalar root finder or other numeric routine failed to converge.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linesearch stepsize underflowed below its floor.
struct linesearch_stall_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Stepsize initialization exhausted its reset rounds.
struct initialization_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file (config or LIBSVM data).
struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bregman
