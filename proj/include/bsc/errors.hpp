#pragma once

#include <stdexcept>
#include <string>

namespace bsc {

// Incompatible matrix/vector dimensions.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerically degenerate or out-of-domain input (empty batch, all-zero row,
// all rows masked, constant ranks, ...).
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A caller violated an API precondition (bad flag combination, k out of
// range, duplicate ids, ...).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed input files or configuration.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss or gradient.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& msg, std::size_t step)
      : std::runtime_error(msg), step(step) {}
  std::size_t step;
};

}  // namespace bsc
