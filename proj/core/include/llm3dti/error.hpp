#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace llm3dti {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A scalar argument is outside its documented range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// An iterative routine hit its cap before meeting tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Input data is well-formed but semantically invalid.
class InputError : public Error {
 public:
  using Error::Error;
};

// A file could not be parsed; carries the 1-based line number (0 if n/a).
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Metric is undefined for the given labels (e.g. a single class).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss during optimization.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t epoch, std::size_t batch)
      : Error(what), epoch_(epoch), batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

// API misuse, e.g. backward on activations from another parameter state.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace llm3dti
