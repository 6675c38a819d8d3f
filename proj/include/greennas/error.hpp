#pragma once

#include <chrono>
#include <stdexcept>
#include <string>

namespace greennas {

// Base for all library failures. Callers that only want to report a
// diagnostic can catch this one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition of an operation was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Input data is malformed, incomplete or inconsistent with the schema.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Serialized artifact could not be decoded (bad magic, version, checksum, shapes).
class FormatError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf appeared where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A transient failure; the operation may succeed if retried after `backoff`.
class RetriableError : public Error {
 public:
  RetriableError(const std::string& what, int attempts,
                 std::chrono::milliseconds backoff)
      : Error(what), attempts_(attempts), backoff_(backoff) {}

  int attempts() const noexcept { return attempts_; }
  std::chrono::milliseconds backoff() const noexcept { return backoff_; }

 private:
  int attempts_;
  std::chrono::milliseconds backoff_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

}  // namespace greennas
