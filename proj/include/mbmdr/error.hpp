#pragma once

#include <stdexcept>
#include <string>

namespace mbmdr {

// Every failure raised by the library derives from Error. The CLI maps the
// subclasses onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (CSV cell, model file syntax).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a data contract (phenotype outside {0,1},
// level out of range, schema mismatch, unknown model version).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A request that no amount of retrying can satisfy: unreachable heritability,
// not enough cases for k folds, rejection budget exhausted.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Caller broke a precondition of a library function.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace mbmdr
