#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stratprof {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point or array does not match the coordinate layout of its group/grid.
class LayoutError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (alpha <= 0, s >= Q/2, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Index outside a cached or configured range (scale not in a KernelSet, ...).
class RangeError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A ledger identity that must hold by construction failed.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// Extraction hit a rank whose track is neither orthogonal nor stably related to a profile.
class UndecidableOrthogonality : public Error {
 public:
  UndecidableOrthogonality(const std::string& what, int rank, int profile)
      : Error(what), rank_(rank), profile_(profile) {}
  int rank() const { return rank_; }
  int profile() const { return profile_; }

 private:
  int rank_;
  int profile_;
};

class NonconvergentCoefficient : public Error {
 public:
  NonconvergentCoefficient(const std::string& what, int rank) : Error(what), rank_(rank) {}
  int rank() const { return rank_; }

 private:
  int rank_;
};

}  // namespace stratprof
