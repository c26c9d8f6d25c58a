#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spikestream {

// Base for every error raised by the library. The CLI maps subclasses onto
// exit codes, so keep the hierarchy shallow.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input bytes. offset() is the byte position of the offending record.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Invalid parameters for a spec, bank, kernel or config.
class ParameterError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(int iteration, std::size_t sample, std::size_t segment)
      : Error("non-finite weight at iteration " + std::to_string(iteration) + ", sample " +
              std::to_string(sample) + ", segment " + std::to_string(segment)),
        iteration_(iteration),
        segment_(segment) {}
  int iteration() const noexcept { return iteration_; }
  std::size_t segment() const noexcept { return segment_; }

 private:
  int iteration_;
  std::size_t segment_;
};

}  // namespace spikestream
