#pragma once

#include <stdexcept>
#include <string>

namespace pgate {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The tilted quartic has fewer than three real critical points.
class MonostableError : public Error {
 public:
  using Error::Error;
};

/// Euler-Maruyama integration left the admissible region.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class AllZeroDifferences : public Error {
 public:
  using Error::Error;
};

class ZeroVariance : public Error {
 public:
  using Error::Error;
};

class DegenerateGrid : public Error {
 public:
  using Error::Error;
};

class UnimodalSegment : public Error {
 public:
  using Error::Error;
};

class InsufficientCrossings : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pgate
