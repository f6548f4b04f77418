#pragma once

#include <stdexcept>
#include <string>

namespace slqr {

// Base class for everything this library throws on purpose. The CLI maps
// subtypes onto exit codes, tests catch specific kinds.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad problem data (shapes, definiteness, partitions, parse failures).
class InputError : public Error {
 public:
  using Error::Error;
};

// Numerical failure while solving (instability, singularity, divergence).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NonSquare : public InputError {
 public:
  using InputError::InputError;
};

class DimensionMismatch : public InputError {
 public:
  using InputError::InputError;
};

class PartitionMismatch : public InputError {
 public:
  using InputError::InputError;
};

class WrongKind : public InputError {
 public:
  using InputError::InputError;
};

class BadRadius : public InputError {
 public:
  using InputError::InputError;
};

class InvalidWeights : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public InputError {
 public:
  using InputError::InputError;
};

class ZeroReference : public InputError {
 public:
  using InputError::InputError;
};

class NotHurwitz : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularSystem : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoStabilizingSolution : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotStabilizing : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InitNotStabilizing : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BacktrackExhausted : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FeasibilityNotFound : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InnerSolveFailed : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TooManyRejections : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace slqr
