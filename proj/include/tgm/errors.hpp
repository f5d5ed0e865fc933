#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace tgm {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset()` is a byte offset into the input.
class ParseError : public Error {
public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(message + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

class UnknownSymbolError : public Error {
public:
  explicit UnknownSymbolError(std::string symbol)
      : Error("unknown symbol '" + symbol + "'"), symbol_(std::move(symbol)) {}
  const std::string& symbol() const noexcept { return symbol_; }

private:
  std::string symbol_;
};

/// Raised by evaluation instead of silently producing NaN/inf.
class DomainError : public Error {
public:
  using Error::Error;
};

class ValenceError : public Error {
public:
  using Error::Error;
};

class ChartMismatchError : public Error {
public:
  ChartMismatchError() : Error("operands live on different charts") {}
};

class SingularMetricError : public Error {
public:
  using Error::Error;
};

/// Pointwise linear algebra that the theory guarantees but the input violates.
class NumericalError : public Error {
public:
  using Error::Error;
};

}  // namespace tgm
