#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hil {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(what) {}
};

/// Structured parse failure: carries the 1-based line number (0 when the
/// failure is not line-addressable) and the offending field name.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::string field = {})
      : Error(what), line_(line), field_(std::move(field)) {}
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class NotFound : public Error {
 public:
  explicit NotFound(const std::string& what) : Error(what) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what, int attempts = 1)
      : Error(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

class PermissionError : public Error {
 public:
  explicit PermissionError(const std::string& what) : Error(what) {}
};

class InsufficientData : public Error {
 public:
  explicit InsufficientData(const std::string& what) : Error(what) {}
};

class InfeasibleTask : public Error {
 public:
  explicit InfeasibleTask(const std::string& what) : Error(what) {}
};

/// Rollout terminated without reaching DONE; keeps the partial label chain.
class SynthesisFailure : public Error {
 public:
  SynthesisFailure(const std::string& what, std::vector<int> partial)
      : Error(what), partial_(std::move(partial)) {}
  const std::vector<int>& partial_sequence() const { return partial_; }

 private:
  std::vector<int> partial_;
};

}  // namespace hil
