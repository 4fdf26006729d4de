#pragma once

#include <stdexcept>
#include <string>

namespace swarmraft {

/// Precondition or validation failure raised by library operations.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failure; the message carries the offending path.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace swarmraft
