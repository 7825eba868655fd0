#pragma once

#include <stdexcept>
#include <string>

namespace conneckt {

/// Broad failure categories. The CLI maps each one to its own exit code.
enum class ErrorKind {
  Io,
  Format,
  Parse,
  Range,
  Shape,
  Parameter,
  Contract,
  Conditioning,
  Degeneracy,
  Evaluation,
  Dimension,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Range: return "range";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Conditioning: return "conditioning";
    case ErrorKind::Degeneracy: return "degeneracy";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::Dimension: return "dimension";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown when a neuron has no usable variance (constant after filtering,
/// or a nonpositive precision diagonal). Carries the 0-based neuron index.
class DegeneracyError : public Error {
 public:
  DegeneracyError(std::size_t neuron, const std::string& what)
      : Error(ErrorKind::Degeneracy, what), neuron_(neuron) {}

  std::size_t neuron() const noexcept { return neuron_; }

 private:
  std::size_t neuron_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace conneckt
