#pragma once

#include <stdexcept>
#include <string>

namespace mms {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, configs, arguments).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ParseError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// A request that is well formed but exceeds a documented size guard, e.g.
// exhaustive enumeration on too many vehicles.
class GuardViolation : public Error {
 public:
  using Error::Error;
};

// A caller broke a precondition that the callee can detect, such as handing
// partial reevaluation a state computed for a different sequence.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace mms
