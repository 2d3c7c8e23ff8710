#pragma once

#include <stdexcept>
#include <string>

namespace ckm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad parameter ranges, dimension mismatches, empty sets.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A constraint family or flow network that admits no feasible solution.
class Infeasible : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ckm
