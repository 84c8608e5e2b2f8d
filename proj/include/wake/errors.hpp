#pragma once

#include <stdexcept>
#include <string>

namespace wake {

/// Base class for every error raised by the toolkit. `kind()` is a stable
/// machine-readable name used in pipeline error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define WAKE_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name, what) {}  \
  };

WAKE_DEFINE_ERROR(GeometryDegenerate)
WAKE_DEFINE_ERROR(RowAllMissing)
WAKE_DEFINE_ERROR(ShapeMismatch)
WAKE_DEFINE_ERROR(NonFiniteActivation)
WAKE_DEFINE_ERROR(DivergedLoss)
WAKE_DEFINE_ERROR(CholeskyFailure)
WAKE_DEFINE_ERROR(NonFiniteLikelihood)
WAKE_DEFINE_ERROR(PoolExhausted)
WAKE_DEFINE_ERROR(DegenerateVariance)
WAKE_DEFINE_ERROR(TestSetMismatch)
WAKE_DEFINE_ERROR(ConfigError)
WAKE_DEFINE_ERROR(FormatError)
WAKE_DEFINE_ERROR(IoError)
WAKE_DEFINE_ERROR(PreconditionViolated)

#undef WAKE_DEFINE_ERROR

}  // namespace wake
