#pragma once

#include <stdexcept>
#include <string>

namespace lrpool {

/// Invalid argument or violated precondition; the message names the
/// offending field or invariant.
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what)
      : std::invalid_argument(what) {}
};

/// Malformed input file; carries the location that failed to parse.
class FileParseError : public std::runtime_error {
 public:
  FileParseError(std::string path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

/// Training loss became non-finite or blew past the divergence bound.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(std::size_t epoch, const std::string& what)
      : std::runtime_error(what), epoch_(epoch) {}

  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Pool too large for exhaustive subset enumeration.
class EnumerationLimitError : public std::runtime_error {
 public:
  explicit EnumerationLimitError(const std::string& what)
      : std::runtime_error(what) {}
};

/// A query that requires at least one result found none
/// (e.g. best-policy lookup over an all-failed trial set).
class EmptyResultError : public std::runtime_error {
 public:
  explicit EmptyResultError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace lrpool
