#pragma once

#include <stdexcept>
#include <string>

namespace mbnf {

/// Base of every error raised by the engine. `name()` is the stable
/// identifier printed by the command-line tool on failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* name() const noexcept { return "Error"; }
};

/// Raised for invalid user input or configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* name() const noexcept override { return "ConfigError"; }
};

#define MBNF_DEFINE_ERROR(Type, Base)                                  \
  class Type : public Base {                                           \
   public:                                                             \
    using Base::Base;                                                  \
    const char* name() const noexcept override { return #Type; }       \
  }

// polyalg
MBNF_DEFINE_ERROR(NonNilpotentGenerator, Error);
MBNF_DEFINE_ERROR(DegreeCapError, Error);
MBNF_DEFINE_ERROR(SerializationError, Error);

// model
MBNF_DEFINE_ERROR(NonPolynomialError, ConfigError);
MBNF_DEFINE_ERROR(MissingQuadraticError, Error);
MBNF_DEFINE_ERROR(OddPotentialError, ConfigError);
MBNF_DEFINE_ERROR(UnsupportedPotentialError, ConfigError);
MBNF_DEFINE_ERROR(InvalidFrequencyError, Error);

// normform
MBNF_DEFINE_ERROR(InconsistentBlockError, Error);
MBNF_DEFINE_ERROR(SmallDivisorError, Error);
MBNF_DEFINE_ERROR(OrderOverflowError, ConfigError);
MBNF_DEFINE_ERROR(ModeError, Error);

// invariants
MBNF_DEFINE_ERROR(NonRealIntegralError, Error);
MBNF_DEFINE_ERROR(SeedOutsideCZVError, Error);

// dynamics
MBNF_DEFINE_ERROR(EscapeDetected, Error);
MBNF_DEFINE_ERROR(NoBifurcationInRange, Error);

// analysis
MBNF_DEFINE_ERROR(RangeError, Error);
MBNF_DEFINE_ERROR(NoRootError, Error);

#undef MBNF_DEFINE_ERROR

class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, int line, int column)
      : ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  const char* name() const noexcept override { return "ParseError"; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace mbnf
