#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lod3 {

/// Base of every error the pipeline raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (solid, rays, raster, CPT, config, ...).
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function, e.g. log_odds(1.0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Geometry or table failed its invariants. `violations` lists each finding.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> violations)
      : Error(what), violations_(std::move(violations)) {}
  explicit ValidationError(const std::string& what) : Error(what) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DegenerateCorrespondence : public Error {
 public:
  using Error::Error;
};

class FrameMismatch : public Error {
 public:
  using Error::Error;
};

class OpeningOutsideFace : public Error {
 public:
  using Error::Error;
};

class OpeningTouchesBoundary : public Error {
 public:
  using Error::Error;
};

/// Invalid synthetic scene description.
class SpecError : public Error {
 public:
  using Error::Error;
};

}  // namespace lod3
