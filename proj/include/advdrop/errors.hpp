#ifndef ADVDROP_ERRORS_HPP
#define ADVDROP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace advdrop {

// Incompatible tensor/mask shapes. Message names the offending shapes.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Argument outside its mathematical domain (probabilities, sigma < 0, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Malformed input file (bad magic, truncation, count mismatch).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid experiment configuration or unusable network topology.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A ForwardTrace was used after the parameter store changed.
struct StaleTraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss; last good checkpoint was written.
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace advdrop

#endif
