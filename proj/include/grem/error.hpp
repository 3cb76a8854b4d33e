#pragma once

#include <stdexcept>
#include <string>

namespace grem {

enum class ErrorKind {
  validation,   // bad input, spec or config
  domain,       // argument outside the mgf domain
  no_root,      // theta* does not exist
  overflow,     // per-node child cap exceeded
  capacity,     // frontier / point budget exceeded
  budget,       // DP memory budget exceeded
  size,         // brute-force enumeration too large
  convergence,  // numerical tolerance not reached
  window,       // test function sees below the recording window
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit code for an error kind: 2 validation, 3 capacity, 4 convergence.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::overflow:
    case ErrorKind::capacity:
    case ErrorKind::budget:
    case ErrorKind::size:
      return 3;
    case ErrorKind::no_root:
    case ErrorKind::convergence:
      return 4;
    default:
      return 2;
  }
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace grem
