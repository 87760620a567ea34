#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hmlr {

enum class ErrorKind {
  Dimension,
  Domain,
  NonSymmetric,
  NonPsd,
  Singular,
  Unsupported,
  SearchSpaceTooLarge,
  Divergence,
  Format,
  Version,
  Checksum,
  Truncated,
  Io,
  Config,
  MissingArtifact,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool cond, ErrorKind kind, const char* what) {
  if (!cond) fail(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace hmlr
