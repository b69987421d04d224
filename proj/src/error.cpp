#include "cdaug/error.hpp"

namespace cdaug {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kNotFound: return "not-found";
    case ErrorKind::kConflict: return "conflict";
    case ErrorKind::kTransport: return "transport";
    case ErrorKind::kIntegrity: return "integrity";
    case ErrorKind::kTimeout: return "timeout";
    case ErrorKind::kJobFailed: return "job-failed";
    case ErrorKind::kAugmentationFailed: return "augmentation-failed";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kRunner: return "runner";
  }
  return "unknown";
}

}  // namespace cdaug
