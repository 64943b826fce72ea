#pragma once

#include <stdexcept>
#include <string>

namespace fedrlhf {

// Base for every error the library raises. Callers that do not care about the
// category can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (JSON/CSV syntax, wrong column counts).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Invalid argument to a numerical routine (length mismatch, T <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Experiment configuration problem; `field()` is a dotted path such as
// "aggregation.strategy".
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A training round failed; carries the round index it failed in.
class RoundError : public Error {
 public:
  RoundError(long round, const std::string& message)
      : Error("round " + std::to_string(round) + ": " + message),
        round_(round) {}

  long round() const noexcept { return round_; }

 private:
  long round_;
};

}  // namespace fedrlhf
