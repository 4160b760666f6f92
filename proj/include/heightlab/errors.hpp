#pragma once

#include <stdexcept>
#include <string>

namespace heightlab {

// Evaluation outside a potential's certified window, or heights that would
// force such an evaluation.
struct WindowError : std::runtime_error {
  explicit WindowError(const std::string& what) : std::runtime_error(what) {}
};

// A potential that fails the convexity requirement.
struct InvalidPotentialError : std::runtime_error {
  explicit InvalidPotentialError(const std::string& what) : std::runtime_error(what) {}
};

// Exact enumeration would exceed the configured cap.
struct EnumerationCapError : std::runtime_error {
  explicit EnumerationCapError(const std::string& what) : std::runtime_error(what) {}
};

// Bad user configuration; carries the offending field name.
struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string field_, const std::string& what)
      : std::runtime_error("field '" + field_ + "': " + what), field(std::move(field_)) {}
};

}  // namespace heightlab
