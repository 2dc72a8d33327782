#pragma once

#include <stdexcept>
#include <string>

namespace vsloc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Geometry that cannot be simulated: source or receiver outside the room,
// non-positive dimensions, malformed surface profiles.
class InvalidScene : public Error {
 public:
  using Error::Error;
};

class EstimationUnreliable : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Malformed or unknown keys in a configuration document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// On-disk container that does not match its documented layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace vsloc
