#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ccroots {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition or malformed request (CLI exit code 2).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Electron counts that do not fit the orbital space.
class InvalidSector : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Text input that could not be parsed. `line()` is 1-based, 0 if unknown.
class ParseError : public InvalidArgument {
 public:
  ParseError(const std::string& what, int line = 0)
      : InvalidArgument(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Duplicate integral entries that disagree under permutational symmetry.
class SymmetryError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Request exceeds a hard size cap (CLI exit code 3).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// Numerical procedure failed to produce a usable result (CLI exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ccroots
