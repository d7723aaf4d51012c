#pragma once

#include <stdexcept>
#include <string>

namespace stereogate {

// Malformed input, bad parameters, schema mismatches. CLI exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model file with an unexpected format version.
class VersionError : public InputError {
 public:
  using InputError::InputError;
};

// Truncated or unparseable model file.
class CorruptFileError : public InputError {
 public:
  using InputError::InputError;
};

// Numerical breakdown during fitting (e.g. a covariance that lost
// positive-definiteness). CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stereogate
