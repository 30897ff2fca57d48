#pragma once

#include <stdexcept>

namespace noloco {

/// Invalid or inconsistent configuration. The CLI maps this to exit code 1.
class config_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not line up.
class shape_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An operation was called out of sequence (e.g. backward with a stale cache).
class state_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite values or failed decompositions at run time. CLI exit code 2.
class numeric_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace noloco
