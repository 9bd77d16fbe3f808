#pragma once

#include <stdexcept>
#include <string>

namespace disfilter {

/// Invalid input: bad dimensions, malformed topology, out-of-range parameters.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical precondition failed at run time (loss of definiteness,
/// singular factorization).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace disfilter
