#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace quadpend {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Pitch reached +/- pi/2 where the Euler-rate map is singular.
class SingularAttitudeError : public Error {
 public:
  using Error::Error;
};

// Pendulum reached (or came too close to) the horizontal, zeta -> 0.
class PendulumDegenerateError : public Error {
 public:
  using Error::Error;
};

// cos(phi) cos(theta) vanished, so A(x) B cannot be inverted.
class DecouplingSingularityError : public Error {
 public:
  using Error::Error;
};

// Thrust direction undefined in position allocation.
class AllocationError : public Error {
 public:
  using Error::Error;
};

class InvalidParamsError : public Error {
 public:
  using Error::Error;
};

// An integrator stage produced NaN/Inf.
class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class CareError : public Error {
 public:
  using Error::Error;
};

class CareNoSolutionError : public CareError {
 public:
  using CareError::CareError;
};

class CareInvalidProblemError : public CareError {
 public:
  using CareError::CareError;
};

class QpError : public Error {
 public:
  using Error::Error;
};

// Carries the constraint rows that jointly admit no solution.
class QpInfeasibleError : public QpError {
 public:
  QpInfeasibleError(const std::string& what, std::vector<int> certificate)
      : QpError(what), certificate_(std::move(certificate)) {}
  const std::vector<int>& certificate() const { return certificate_; }

 private:
  std::vector<int> certificate_;
};

class QpUnboundedError : public QpError {
 public:
  using QpError::QpError;
};

// Scenario or scenario-file problems; maps to CLI exit status 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace quadpend
