#pragma once

#include <stdexcept>
#include <string>

namespace covest {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class SingularNormalEquations : public Error {
 public:
  using Error::Error;
};

class ZeroMeanRequired : public Error {
 public:
  using Error::Error;
};

class EmptySample : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownScenario : public Error {
 public:
  using Error::Error;
};

/// Thrown while decoding a JSON document; field() names the offending key.
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& what)
      : Error("field '" + field + "': " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace covest
