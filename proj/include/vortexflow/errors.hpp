#pragma once

#include <stdexcept>
#include <string>

namespace vflow {

// Invalid or inconsistent user input (lengths, resolutions, config keys).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration that is meaningful but not constructed by this library.
struct UnsupportedConfiguration : ConfigError {
  using ConfigError::ConfigError;
};

// Poisson right-hand side with nonzero mean.
struct SolvabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A plaquette phase reached the edge of the principal branch.
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values appeared during time stepping.
struct BlowUpError : std::runtime_error {
  BlowUpError(const std::string& what, long step_index)
      : std::runtime_error(what), step(step_index) {}
  long step;
};

// Malformed series or snapshot file.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vflow
