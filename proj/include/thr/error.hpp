#pragma once

#include <stdexcept>
#include <string>

namespace thr {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used in the CLI's structured error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& m) : Error("schema", m) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& m, std::size_t row)
      : Error("parse", m), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class EncodingError : public Error {
 public:
  explicit EncodingError(const std::string& m) : Error("encoding", m) {}
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& m) : Error("parameter", m) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};

/// A fit needs both label classes but only one is present.
class DegeneracyError : public Error {
 public:
  explicit DegeneracyError(const std::string& m) : Error("degeneracy", m) {}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& m, double gradient_norm)
      : Error("convergence", m), gradient_norm_(gradient_norm) {}
  double gradient_norm() const noexcept { return gradient_norm_; }

 private:
  double gradient_norm_;
};

/// A populated cell lacks observations in one arm.
class DegenerateCellError : public Error {
 public:
  DegenerateCellError(const std::string& m, std::size_t cell, std::string label)
      : Error("degenerate_cell", m), cell_(cell), label_(std::move(label)) {}
  std::size_t cell() const noexcept { return cell_; }
  const std::string& label() const noexcept { return label_; }

 private:
  std::size_t cell_;
  std::string label_;
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& m) : Error("solver", m) {}
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& m) : Error("invariant", m) {}
};

}  // namespace thr
