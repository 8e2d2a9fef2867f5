#pragma once

#include <stdexcept>
#include <string>

namespace rog {

enum class ErrorKind {
  kInvalidArgument,
  kEmptyForeground,
  kDegenerateStats,
  kInvalidConfig,
  kMissingReference,
  kCapability,
  kCoverage,
  kNotFound,
  kIo,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace rog
