#pragma once

#include <stdexcept>
#include <string>

namespace codedbai {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaError : Error {
  using Error::Error;
};

struct InstanceInvalid : Error {
  using Error::Error;
};

struct InfeasibleGenerator : Error {
  using Error::Error;
};

struct BudgetTooSmall : Error {
  using Error::Error;
};

struct BudgetExceeded : Error {
  using Error::Error;
};

struct SingularV : Error {
  using Error::Error;
};

struct MissingPull : Error {
  using Error::Error;
};

struct StructureViolation : Error {
  using Error::Error;
};

struct InsufficientData : Error {
  using Error::Error;
};

}  // namespace codedbai
