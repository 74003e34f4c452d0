#pragma once

#include <stdexcept>
#include <string>

namespace qvar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  /// Short machine-readable category, e.g. "dimension" or "domain".
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define QVAR_DEFINE_ERROR(Name, tag)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(tag, what) {}       \
  };

QVAR_DEFINE_ERROR(DimensionError, "dimension")
QVAR_DEFINE_ERROR(SchemeError, "scheme")
QVAR_DEFINE_ERROR(DomainError, "domain")
QVAR_DEFINE_ERROR(SamplingError, "sampling")
QVAR_DEFINE_ERROR(EstimationError, "estimation")
QVAR_DEFINE_ERROR(UsageError, "usage")
QVAR_DEFINE_ERROR(VanishingH, "vanishing-H")
QVAR_DEFINE_ERROR(ExcessTooLarge, "excess-too-large")
QVAR_DEFINE_ERROR(PreconditionError, "precondition")
QVAR_DEFINE_ERROR(CollapsedAnnulus, "collapsed-annulus")
QVAR_DEFINE_ERROR(ConvergenceError, "convergence")
QVAR_DEFINE_ERROR(FormatError, "format")

#undef QVAR_DEFINE_ERROR

}  // namespace qvar
