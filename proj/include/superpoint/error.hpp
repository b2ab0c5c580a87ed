// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace superpoint {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument or configuration value outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// All g counters of an estimator are active; the cardinality is unbounded.
class SaturatedError : public Error {
 public:
  using Error::Error;
};

/// The all-rows false-active probability is so close to 1 that the
/// bias-corrected estimate carries no information.
class OverloadError : public Error {
 public:
  using Error::Error;
};

class FrameOverflowError : public Error {
 public:
  FrameOverflowError(uint32_t frame, uint64_t tuples, uint64_t cap)
      : Error("frame " + std::to_string(frame) + " yields " +
              std::to_string(tuples) + " candidate column tuples (cap " +
              std::to_string(cap) + ")"),
        frame_(frame),
        tuples_(tuples) {}

  uint32_t frame() const { return frame_; }
  uint64_t tuples() const { return tuples_; }

 private:
  uint32_t frame_;
  uint64_t tuples_;
};

class ParseError : public Error {
 public:
  ParseError(uint64_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  uint64_t line() const { return line_; }

 private:
  uint64_t line_;
};

/// A trace whose slice indices go backwards.
class OrderingError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Invalid synthetic trace description.
class SpecError : public Error {
 public:
  using Error::Error;
};

class SnapshotError : public Error {
 public:
  using Error::Error;
};

}  // namespace superpoint
