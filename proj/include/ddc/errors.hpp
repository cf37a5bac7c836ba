#pragma once

#include <stdexcept>
#include <string>

namespace ddc {

// Exit-code classes used by the CLI: 2 assumption violation, 3 infeasible,
// 4 I/O, 1 everything else.
struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RankDeficient : std::runtime_error {
  int numerical_rank;
  RankDeficient(const std::string& msg, int rank)
      : std::runtime_error(msg), numerical_rank(rank) {}
};

struct AssumptionViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
  long step;
  DivergenceError(const std::string& msg, long k)
      : std::runtime_error(msg), step(k) {}
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BuildError : std::runtime_error {  // malformed problem construction
  using std::runtime_error::runtime_error;
};

}  // namespace ddc
