#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hoopnet {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree (matrix products, sequence lengths, tensor layouts).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the operation's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. Carries the 1-based line number of the bad row.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that does not match the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// The finite-difference oracle hit a non-finite function value.
class OracleError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Optimization diverged. batch_id / epoch identify where.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t batch_id = 0, std::size_t epoch = 0)
      : Error(what), batch_id_(batch_id), epoch_(epoch) {}
  std::size_t batch_id() const noexcept { return batch_id_; }
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t batch_id_;
  std::size_t epoch_;
};

}  // namespace hoopnet
