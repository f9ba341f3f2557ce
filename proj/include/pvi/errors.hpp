#pragma once

#include <stdexcept>
#include <string>

namespace pvi {

/// Raised when a numerical evaluation cannot proceed: a pole was hit, a series
/// failed to converge, an integration step underflowed, ...
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed or invalid user input.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PVI_DEFINE_ERROR(Name, Base)                                   \
  class Name : public Base {                                           \
   public:                                                             \
    explicit Name(const std::string& what) : Base(#Name ": " + what) {} \
  };

PVI_DEFINE_ERROR(NonConvergence, NumericalError)
PVI_DEFINE_ERROR(NoConvergence, NumericalError)
PVI_DEFINE_ERROR(PoleAtLattice, NumericalError)
PVI_DEFINE_ERROR(SingularPoint, NumericalError)
PVI_DEFINE_ERROR(ParticleCollision, NumericalError)
PVI_DEFINE_ERROR(DegenerateCurve, NumericalError)
PVI_DEFINE_ERROR(DegenerateFrame, NumericalError)
PVI_DEFINE_ERROR(DerivativeUnstable, NumericalError)
PVI_DEFINE_ERROR(StepUnderflow, NumericalError)
PVI_DEFINE_ERROR(NonFinite, NumericalError)
PVI_DEFINE_ERROR(MarkedPointProximity, NumericalError)
PVI_DEFINE_ERROR(BranchPointOnPath, NumericalError)

PVI_DEFINE_ERROR(ValidationError, InputError)

#undef PVI_DEFINE_ERROR

/// Config parse failure; carries the 1-based line number.
class ParseError : public InputError {
 public:
  ParseError(int line, const std::string& what)
      : InputError("ParseError: line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace pvi
