#pragma once

#include <stdexcept>
#include <string>

namespace ringlaw {

/// Base of every error raised by the library. Context strings can be
/// prepended while the exception propagates (see add_context).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message)
      : std::runtime_error(message), message_(message) {}

  const char* what() const noexcept override { return message_.c_str(); }

  void add_context(const std::string& context) {
    message_ = context + ": " + message_;
  }

 private:
  std::string message_;
};

/// Bad input data, bad arguments, bad files. The CLI maps these to exit 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed on valid input. The CLI maps these to exit 1.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public InputError {
 public:
  using InputError::InputError;
};

class ZeroVarianceRow : public InputError {
 public:
  ZeroVarianceRow(const std::string& row, const std::string& detail)
      : InputError("zero-variance row " + row + detail), row_(row) {}
  const std::string& row() const noexcept { return row_; }

 private:
  std::string row_;
};

class DimensionMismatch : public InputError {
 public:
  using InputError::InputError;
};

class EmptySpectrum : public InputError {
 public:
  EmptySpectrum() : InputError("spectrum is empty") {}
};

class InsufficientHistory : public InputError {
 public:
  using InputError::InputError;
};

class UnknownBus : public InputError {
 public:
  explicit UnknownBus(int bus)
      : InputError("unknown bus " + std::to_string(bus)), bus_(bus) {}
  int bus() const noexcept { return bus_; }

 private:
  int bus_;
};

class SeriesTooShort : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

class DisconnectedGraph : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public InputError {
 public:
  using InputError::InputError;
};

class FormatError : public InputError {
 public:
  using InputError::InputError;
};

class EmptyPointSet : public InputError {
 public:
  EmptyPointSet() : InputError("no points to interpolate") {}
};

class TimeNotInSeries : public InputError {
 public:
  using InputError::InputError;
};

class DecompositionFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EigenFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace ringlaw
