#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace selrcn {

/// Shapes of operands are incompatible.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An index (class label, axis, frame number) is outside its valid range.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A caller broke an API contract (e.g. backward from a non-scalar).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid user-supplied data: empty video, crop larger than frame, bad config.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Text input (manifest, PPM header) could not be parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary checkpoint is malformed. `offset` is the byte position where
/// decoding failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnsupportedVersionError : public FormatError {
 public:
  UnsupportedVersionError(std::uint32_t version, std::size_t offset)
      : FormatError("unsupported checkpoint version " + std::to_string(version), offset),
        version_(version) {}

  std::uint32_t version() const noexcept { return version_; }

 private:
  std::uint32_t version_;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace selrcn
