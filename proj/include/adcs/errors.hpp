#pragma once

#include <stdexcept>
#include <string>

namespace adcs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or out-of-domain input (bad inertia, date outside the
/// ephemeris window, degenerate range, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The closed-loop state or a training loss became non-finite.
class DivergedError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A required artifact (gains file, model bundle) is absent.
class MissingArtifactError : public Error {
 public:
  MissingArtifactError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// The estimator produced a quaternion too short to renormalize.
class EstimateInvalidError : public Error {
 public:
  using Error::Error;
};

}  // namespace adcs
