#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace thermosep {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments outside an operation's domain.
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// A computation could not produce a trustworthy result (divergence,
/// non-convergence, instability).
class NumericalError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Six significant digits, for messages.
inline std::string describe(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

} // namespace thermosep
