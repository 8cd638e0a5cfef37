#pragma once
#include <cstddef>
#include <stdexcept>
#include <string>

namespace ibc {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! Bad user input: model parameters, grid specs, config values.
class ConfigError : public Error {
public:
  using Error::Error;
};

class QuadratureFailure : public Error {
public:
  QuadratureFailure(const std::string &what, double estimate, double target)
      : Error(what), estimate_(estimate), target_(target) {}
  double estimate() const { return estimate_; }
  double target() const { return target_; }

private:
  double estimate_;
  double target_;
};

//! Negative power of L requested on a sector that contains L = 0.
class SingularInverse : public Error {
public:
  using Error::Error;
};

class NoConvergence : public Error {
public:
  NoConvergence(const std::string &what, std::size_t iterations,
                double best_residual)
      : Error(what), iterations_(iterations), best_residual_(best_residual) {}
  std::size_t iterations() const { return iterations_; }
  double best_residual() const { return best_residual_; }

private:
  std::size_t iterations_;
  double best_residual_;
};

class DimensionCap : public Error {
public:
  using Error::Error;
};

class EpsilonTooLarge : public Error {
public:
  using Error::Error;
};

//! Index arithmetic would leave the platform's index range.
class IndexOverflow : public Error {
public:
  using Error::Error;
};

} // namespace ibc
