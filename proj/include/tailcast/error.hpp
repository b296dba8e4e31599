#pragma once

#include <stdexcept>
#include <string>

namespace tailcast {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& field, const std::string& what)
      : Error("parse error in " + field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

class DomainError : public Error {
public:
  using Error::Error;
};

class EmptyListError : public Error {
public:
  using Error::Error;
};

/// Parameters outside the region where the tail-mass reparametrization is defined.
class ReparamOutOfDomain : public DomainError {
public:
  using DomainError::DomainError;
};

class TuningFailed : public Error {
public:
  TuningFailed(double last_rate, const std::string& what)
      : Error(what), last_rate_(last_rate) {}
  double last_acceptance_rate() const noexcept { return last_rate_; }

private:
  double last_rate_;
};

class FitFailed : public Error {
public:
  using Error::Error;
};

class InsufficientEvents : public Error {
public:
  using Error::Error;
};

class IntegrationUnstable : public Error {
public:
  using Error::Error;
};

class AnchorNotFound : public Error {
public:
  using Error::Error;
};

class MissingOutcome : public Error {
public:
  using Error::Error;
};

class UndefinedCorrelation : public Error {
public:
  using Error::Error;
};

}  // namespace tailcast
