#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace socrat {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptySequence : public Error {
 public:
  EmptySequence() : Error("sequence is empty after tokenization") {}
};

class EmptyNeighborhood : public Error {
 public:
  explicit EmptyNeighborhood(const std::string& word)
      : Error("no vocabulary word within the edit radius of '" + word + "'") {}
};

class ExternalPerturberUnavailable : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MissingFile : public Error {
 public:
  explicit MissingFile(const std::string& path) : Error("cannot open " + path), path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class MissingOriginal : public Error {
 public:
  MissingOriginal() : Error("perturbation file has no 'original' record") {}
};

// A black box failed to answer. `index` is the position of the failing input
// within the batch, or npos when the whole batch failed at once.
class BlackBoxFailure : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit BlackBoxFailure(const std::string& what, std::size_t index = npos)
      : Error(what), index_(index) {}

  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class InfeasibleBounds : public Error {
 public:
  using Error::Error;
};

class InvalidK : public Error {
 public:
  using Error::Error;
};

}  // namespace socrat
