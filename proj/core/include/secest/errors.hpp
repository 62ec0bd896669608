#pragma once

#include <stdexcept>
#include <string>

namespace secest {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent matrix/vector dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The stacked observability matrix is rank deficient; x(0) cannot be
/// determined even from attack-free measurements.
class UnobservableSystem : public Error {
 public:
  using Error::Error;
};

/// Innovation covariance is numerically singular in a filter update.
class SingularInnovation : public Error {
 public:
  using Error::Error;
};

/// No finite window length certifies the requested number of errors.
class NotCorrectable : public Error {
 public:
  using Error::Error;
};

/// Riccati iteration or pole placement failed to converge.
class DesignError : public Error {
 public:
  using Error::Error;
};

/// Invalid scenario or system file contents.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace secest
