#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace amgenc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DegenerateLattice : public Error {
public:
  using Error::Error;
};

class InvalidElement : public Error {
public:
  using Error::Error;
};

class InvalidSize : public Error {
public:
  using Error::Error;
};

class EmptyBatch : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class ShapeMismatch : public Error {
public:
  using Error::Error;
};

/// Soft-charge gradient is numerically zero while the hard charge is not.
class VanishingGradient : public Error {
public:
  using Error::Error;
};

/// No reassignment reaches zero total charge.
class InfeasibleRepair : public Error {
public:
  InfeasibleRepair(const std::string &what, long nearest_charge)
      : Error(what), nearest_charge_(nearest_charge) {}

  /// Total charge closest to zero that the repair could reach.
  long nearest_charge() const noexcept { return nearest_charge_; }

private:
  long nearest_charge_;
};

class CutoffExceedsCell : public Error {
public:
  using Error::Error;
};

class WeightMismatch : public Error {
public:
  WeightMismatch(const std::string &what, std::string parameter)
      : Error(what), parameter_(std::move(parameter)) {}

  const std::string &parameter() const noexcept { return parameter_; }

private:
  std::string parameter_;
};

class MissingRadius : public Error {
public:
  using Error::Error;
};

class RangeExceedsCell : public Error {
public:
  using Error::Error;
};

class EmptyStructure : public Error {
public:
  using Error::Error;
};

class ZeroTarget : public Error {
public:
  using Error::Error;
};

/// Text-format parse failure; carries the 1-based offending line.
class ParseError : public Error {
public:
  ParseError(const std::string &what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

// Binary weight-container failures.
class BadMagic : public Error {
public:
  using Error::Error;
};

class TruncatedStream : public Error {
public:
  using Error::Error;
};

class NonFiniteValue : public Error {
public:
  using Error::Error;
};

} // namespace amgenc
