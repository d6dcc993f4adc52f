#pragma once

#include <stdexcept>
#include <string>

namespace pmuopt {

// Error taxonomy used across the library. The CLI maps these onto exit
// codes: config/contract/parse/validation -> 1, infeasible -> 2,
// numerical -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  ParseError(const std::string& what, int line)
      : Error("parse error (line " + std::to_string(line) + "): " + what),
        line_number(line) {}
  int line_number;
};

struct ValidationError : Error {
  using Error::Error;
};

struct TopologyError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct ContractError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

struct InfeasibleError : Error {
  using Error::Error;
};

}  // namespace pmuopt
