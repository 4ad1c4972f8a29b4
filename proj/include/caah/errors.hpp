#pragma once

#include <stdexcept>
#include <string>

namespace caah {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files, manifests, or inconsistent samples.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite losses or parameters during training or checking.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration values or unknown config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace caah
