#pragma once

#include <stdexcept>
#include <string>

namespace hclm {

// Error taxonomy shared by all modules. The CLI maps these onto exit codes:
// usage errors -> 1, I/O and format errors -> 2, numeric/model errors -> 3.

struct InvalidShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ContractViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyCacheError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ImpossibleEventError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hclm
