#pragma once

#include <stdexcept>
#include <string>

namespace fwc {

// Base for every error raised by the library. The CLI maps all of these to
// exit code 1 with what() as the one-line diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class EmptyDatasetError : public Error { using Error::Error; };
class InvalidSpecError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };
class InfeasibleSizeError : public Error { using Error::Error; };
class DegenerateGroupError : public Error { using Error::Error; };
class DegenerateModelError : public Error { using Error::Error; };
class BoundaryError : public Error { using Error::Error; };
class ConvergenceError : public Error { using Error::Error; };

// Caller broke a documented precondition (e.g. dimension mismatch).
class ContractViolation : public Error { using Error::Error; };

}  // namespace fwc
