#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cdaug {

/// Broad failure classes. The CLI maps these onto exit codes and the HTTP
/// frontend onto status codes, so keep the set small.
enum class ErrorKind {
  kValidation,    // caller-supplied data breaks an invariant
  kPrecondition,  // operation called in a state it does not accept
  kNotFound,
  kConflict,
  kTransport,     // network or subprocess I/O
  kIntegrity,     // digest mismatch, corrupted payload
  kTimeout,
  kJobFailed,
  kAugmentationFailed,
  kIo,
  kRunner,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cdaug
