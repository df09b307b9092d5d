#pragma once

#include <stdexcept>
#include <string>

namespace qes {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define QES_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(what) {}      \
  }

QES_DEFINE_ERROR(DegenerateDenominator);
QES_DEFINE_ERROR(NearPole);
QES_DEFINE_ERROR(UnknownFrame);
QES_DEFINE_ERROR(ValidationFailed);
QES_DEFINE_ERROR(NotFExpressible);
QES_DEFINE_ERROR(DegenerateState);
QES_DEFINE_ERROR(ComplexValuedOnInterval);
QES_DEFINE_ERROR(BranchCollision);
QES_DEFINE_ERROR(NoRealBranch);
QES_DEFINE_ERROR(UnknownEntry);

#undef QES_DEFINE_ERROR

/// Raised by the multi-start solver when no start reaches the residual target.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

}  // namespace qes
