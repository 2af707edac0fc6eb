#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace loopkit {

/// Base of every error raised by the toolkit. `kind()` is a stable machine
/// name used in CLI/HTTP error payloads.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define LOOPKIT_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

LOOPKIT_DEFINE_ERROR(InvalidArgument)
LOOPKIT_DEFINE_ERROR(DegenerateBox)
LOOPKIT_DEFINE_ERROR(DegenerateReconstruction)
LOOPKIT_DEFINE_ERROR(UnknownClass)
LOOPKIT_DEFINE_ERROR(InsufficientMatches)
LOOPKIT_DEFINE_ERROR(DegenerateConfiguration)
LOOPKIT_DEFINE_ERROR(NoConsensus)
LOOPKIT_DEFINE_ERROR(NoFeatures)
LOOPKIT_DEFINE_ERROR(PlacementOutOfFrame)
LOOPKIT_DEFINE_ERROR(FormatError)
LOOPKIT_DEFINE_ERROR(IoError)

#undef LOOPKIT_DEFINE_ERROR

}  // namespace loopkit
