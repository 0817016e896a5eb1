#pragma once

#include <stdexcept>
#include <string>

namespace braid {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed inputs: bad indices, shape mismatches, non-normalized tables.
struct ValidationError : Error {
  using Error::Error;
};

// Conditioning or updating on an event of probability zero.
struct ZeroProbabilityError : Error {
  using Error::Error;
};

// A problem with no well-defined solution (e.g. every utility is -inf).
struct DegenerateError : Error {
  using Error::Error;
};

// Scalar parameter out of range (e.g. temperature <= 0).
struct ParameterError : Error {
  using Error::Error;
};

// Instance too large to enumerate; the message carries the measured bound.
struct CapacityError : Error {
  using Error::Error;
};

// Config file problems, with line/field diagnostics in the message.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace braid
