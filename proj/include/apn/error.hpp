#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace apn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Syntax or schema problem in a model document. Line and column are 1-based;
// zero means the position is unknown.
class ParseError : public Error {
 public:
  ParseError(std::string message, int line = 0, int column = 0);

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  int line_;
  int column_;
};

struct Violation;

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

// A layer template uses or produces a color outside its declared span.
class ColorLeak : public Error {
 public:
  using Error::Error;
};

// Too many zero-delay firings at one instant.
class LivelockError : public Error {
 public:
  LivelockError(double time, std::vector<std::string> transitions);

  double time() const noexcept { return time_; }
  const std::vector<std::string>& transitions() const noexcept { return transitions_; }

 private:
  double time_;
  std::vector<std::string> transitions_;
};

// A token acquired a color that the net never declares.
class ColorClosureError : public Error {
 public:
  using Error::Error;
};

class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

class VanishingCycle : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Engine invariant broken; indicates a bug rather than a model problem.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace apn
