#include "hmlr/errors.hpp"

namespace hmlr {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::NonSymmetric: return "non-symmetric";
    case ErrorKind::NonPsd: return "non-psd";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::SearchSpaceTooLarge: return "search-space-too-large";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Format: return "format";
    case ErrorKind::Version: return "version";
    case ErrorKind::Checksum: return "checksum";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::Io: return "io";
    case ErrorKind::Config: return "config";
    case ErrorKind::MissingArtifact: return "missing-artifact";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace hmlr
