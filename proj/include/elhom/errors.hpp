#pragma once

#include <stdexcept>
#include <string>

namespace elhom {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Array length does not match the quadrature layout of a grid.
class LengthMismatch : public Error {
 public:
  using Error::Error;
};

/// The density has no quadratic expansion at the identity.
class NotExpandable : public Error {
 public:
  using Error::Error;
};

class NotConverged : public Error {
 public:
  using Error::Error;
};

/// Every start of a multistart minimization failed.
class AllStartsFailed : public Error {
 public:
  using Error::Error;
};

/// A negative Rayleigh quotient was met while running conjugate gradients.
class IndefiniteForm : public Error {
 public:
  using Error::Error;
};

class FitIllConditioned : public Error {
 public:
  using Error::Error;
};

class UnsupportedLoad : public Error {
 public:
  using Error::Error;
};

class InvalidDelta : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace elhom
