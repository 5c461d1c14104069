#pragma once

#include <stdexcept>
#include <string>

namespace ngrasp {

/// Base class for all recoverable ngrasp errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// geometry
class CollinearPoints : public Error {
 public:
  using Error::Error;
};
class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

// camera
class BehindCamera : public Error {
 public:
  using Error::Error;
};
class DegenerateRays : public Error {
 public:
  using Error::Error;
};
class OutOfImageBounds : public Error {
 public:
  using Error::Error;
};
class InsufficientCorners : public Error {
 public:
  using Error::Error;
};
class IllConditioned : public Error {
 public:
  using Error::Error;
};

// kinematics
class JointLimitViolation : public Error {
 public:
  using Error::Error;
};
class OutOfWorkspace : public Error {
 public:
  using Error::Error;
};
class SingularDirection : public Error {
 public:
  using Error::Error;
};
class NoFeasibleSolution : public Error {
 public:
  using Error::Error;
};

// perception / servo
class InsufficientMarkers : public Error {
 public:
  using Error::Error;
};
class StaleEstimate : public Error {
 public:
  using Error::Error;
};

// config / IO
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ngrasp
