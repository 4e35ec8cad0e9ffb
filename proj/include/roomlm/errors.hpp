#pragma once

#include <stdexcept>
#include <string>

namespace roomlm {

/// Invalid argument to a library call (negative alpha, k <= 0, empty sentence, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed record in an input file. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Input is well-formed but references something undeclared (label space, room label).
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scoring backend failed or answered with something that is not a logprob payload.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, std::string sentence)
      : std::runtime_error(what + " [sentence: \"" + sentence + "\"]"),
        sentence_(std::move(sentence)) {}
  const std::string& sentence() const { return sentence_; }

 private:
  std::string sentence_;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace roomlm
