// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixmc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or domain violation in arguments (dimension mismatch, empty data, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Power iteration failed to reach the tolerance. Carries the last iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate,
                   double residual)
      : Error(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}

  const std::vector<double>& last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }

 private:
  std::vector<double> last_iterate_;
  double residual_;
};

// Every cluster assigns zero probability to some sequence.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, std::size_t sequence_index)
      : Error(what), sequence_index_(sequence_index) {}

  std::size_t sequence_index() const { return sequence_index_; }

 private:
  std::size_t sequence_index_;
};

// Malformed input file. line() is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mixmc
