#pragma once

#include <stdexcept>
#include <string>

namespace steinpoly {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can catch one type and still discriminate on the concrete kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// z outside the family's declared instrument domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

/// Quadrature or lattice summation failed to converge within its caps.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// A Stein operator left a non-cancelling rational remainder on a polynomial.
class OperatorMismatch : public Error {
 public:
  using Error::Error;
};

class NotAnEigenfunction : public Error {
 public:
  using Error::Error;
};

class NoPolynomialBasis : public Error {
 public:
  using Error::Error;
};

class NotPearsonOrd : public Error {
 public:
  using Error::Error;
};

class IllConditionedGrid : public Error {
 public:
  using Error::Error;
};

class RankDeficiency : public Error {
 public:
  using Error::Error;
};

class TruncationTooSmall : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line) : Error(what), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

}  // namespace steinpoly
