#pragma once

#include <stdexcept>
#include <string>

namespace sigmak {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (k > n, |xi| >= 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Curvature vector left the admissible cone (sigma_k <= 0, or a non-positive radius).
class ConeError : public Error {
 public:
  using Error::Error;
};

/// Discrete gradient reached the light cone: |Du|^2 > 1 - guard.
class SpacelikeError : public Error {
 public:
  SpacelikeError(const std::string& what, long index, double gradSquared)
      : Error(what), index_(index), gradSquared_(gradSquared) {}
  long index() const noexcept { return index_; }
  double grad_squared() const noexcept { return gradSquared_; }

 private:
  long index_;
  double gradSquared_;
};

/// Loss of (strict) convexity at a grid point.
class ConvexityError : public Error {
 public:
  ConvexityError(const std::string& what, long index) : Error(what), index_(index) {}
  long index() const noexcept { return index_; }

 private:
  long index_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sigmak
