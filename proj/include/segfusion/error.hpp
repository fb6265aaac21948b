#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace segfusion {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raster dimensions or sequence lengths do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the mathematical domain of an operation
/// (bad weights, out-of-range threshold, invalid configuration).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  IoError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Malformed file content. Carries the byte offset (binary rasters) or the
/// 1-based line number (CSV) where parsing stopped.
class ParseError : public Error {
 public:
  enum class Kind {
    kBadMagic,
    kBadHeader,
    kTruncated,
    kInvalidPixel,
    kUnsupported,
    kRaggedRow,
    kDuplicateId,
    kMissingFile,
    kBadValue,
  };

  ParseError(Kind kind, std::string where, std::size_t position,
             const std::string& what)
      : Error(where + " @" + std::to_string(position) + ": " + what),
        kind_(kind),
        position_(position) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t position() const noexcept { return position_; }

 private:
  Kind kind_;
  std::size_t position_;
};

}  // namespace segfusion
