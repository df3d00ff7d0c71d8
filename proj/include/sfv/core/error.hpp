#pragma once

#include <stdexcept>
#include <string>

namespace sfv {

// Base of every error raised by the library. The CLI maps these to exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class InputError : public Error { using Error::Error; };
class ParameterError : public Error { using Error::Error; };
class RankError : public Error {
 public:
  RankError(const std::string& what, std::size_t achievable_rank)
      : Error(what), achievable_rank_(achievable_rank) {}
  std::size_t achievable_rank() const noexcept { return achievable_rank_; }

 private:
  std::size_t achievable_rank_;
};
class InsufficientDataError : public Error { using Error::Error; };
class SingularityError : public Error { using Error::Error; };
class DegenerateLabelError : public Error { using Error::Error; };

// io
class FormatError : public Error { using Error::Error; };
class CorruptionError : public Error {
 public:
  CorruptionError(const std::string& what, std::size_t byte_offset)
      : Error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t index) : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};
class IoError : public Error { using Error::Error; };

}  // namespace sfv
