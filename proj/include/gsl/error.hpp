#pragma once
// Common base for every typed error in the library.  Subsystems derive their
// own exception types from Error so callers can catch per-module or blanket.

#include <stdexcept>
#include <string>

namespace gsl {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem / serialization failures (bad magic, truncated record, unwritable path).
struct IoError : Error {
  std::string path;
  IoError(const std::string& path_, const std::string& cause)
      : Error(path_ + ": " + cause), path(path_) {}
};

// Malformed configuration files; line is 1-based, 0 when not line-specific.
struct ConfigError : Error {
  std::string path;
  int line;
  ConfigError(const std::string& path_, int line_, const std::string& cause)
      : Error(path_ + ":" + std::to_string(line_) + ": " + cause),
        path(path_),
        line(line_) {}
};

}  // namespace gsl
