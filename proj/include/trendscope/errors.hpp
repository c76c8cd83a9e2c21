#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace trendscope {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EmptySliceError : public Error {
 public:
  using Error::Error;
};

// A quantity is mathematically undefined for the given input (zero-norm vector).
class DefinednessError : public Error {
 public:
  DefinednessError(const std::string& what, std::string keyword)
      : Error(what), keyword_(std::move(keyword)) {}
  const std::string& keyword() const noexcept { return keyword_; }

 private:
  std::string keyword_;
};

class DegenerateBandwidthError : public Error {
 public:
  using Error::Error;
};

// Retryable: the request may succeed if sent again.
class TransportError : public Error {
 public:
  using Error::Error;
};

// The remote answered but the envelope could not be understood. Not retried.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class PanelGenerationError : public Error {
 public:
  PanelGenerationError(const std::string& what, std::vector<std::string> violations)
      : Error(what), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class EnsembleFailure : public Error {
 public:
  using Error::Error;
};

class EmptyTallyError : public Error {
 public:
  using Error::Error;
};

class UndefinedDistributionError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class DependencyError : public Error {
 public:
  DependencyError(const std::string& what, std::string missing_stage)
      : Error(what), missing_stage_(std::move(missing_stage)) {}
  const std::string& missing_stage() const noexcept { return missing_stage_; }

 private:
  std::string missing_stage_;
};

}  // namespace trendscope
