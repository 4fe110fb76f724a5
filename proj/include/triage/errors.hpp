#pragma once

#include <stdexcept>
#include <string>

namespace triage {

// Base class for everything thrown by this library.
class TriageError : public std::runtime_error {
 public:
  explicit TriageError(const std::string& msg) : std::runtime_error(msg) {}
};

// A value violates a documented invariant (bad segment times, bad label, ...).
class ValidationError : public TriageError {
 public:
  explicit ValidationError(const std::string& msg) : TriageError(msg) {}
};

// Malformed input file or text; message carries the line number where known.
class ParseError : public TriageError {
 public:
  explicit ParseError(const std::string& msg) : TriageError(msg) {}
};

// A pluggable backend (HTTP or otherwise) failed or returned garbage.
class BackendError : public TriageError {
 public:
  explicit BackendError(const std::string& msg) : TriageError(msg) {}
};

// Bad run configuration (unknown key, missing path, out-of-range value).
class ConfigError : public TriageError {
 public:
  explicit ConfigError(const std::string& msg) : TriageError(msg) {}
};

}  // namespace triage
