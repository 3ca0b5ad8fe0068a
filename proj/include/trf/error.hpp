#pragma once

#include <stdexcept>
#include <string>

namespace trf {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind { validation = 2, format = 3, numerical = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

/// Bad input values, violated preconditions, inconsistent shapes or metadata.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// Unparseable files, unknown tags, I/O failures.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::format, what) {}
};

/// Singular systems, divergence, degenerate (constant) series.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class DegenerateError : public NumericalError {
 public:
  explicit DegenerateError(const std::string& what) : NumericalError(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace trf
