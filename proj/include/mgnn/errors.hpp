#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mgnn {

/// Base class for every error raised by the library. The kind is stable and
/// used by the CLI to choose exit codes.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    invalid_input,
    degenerate_data,
    capacity,
    numeric_overflow,
    accuracy,
    training_diverged,
    calibration,
    parse,
    io,
  };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct InvalidInput : Error {
  explicit InvalidInput(const std::string& what) : Error(Kind::invalid_input, what) {}
};

struct DegenerateData : Error {
  explicit DegenerateData(const std::string& what) : Error(Kind::degenerate_data, what) {}
};

struct CapacityError : Error {
  explicit CapacityError(const std::string& what) : Error(Kind::capacity, what) {}
};

struct NumericOverflow : Error {
  NumericOverflow(const std::string& what, int layer)
      : Error(Kind::numeric_overflow, what), layer(layer) {}
  int layer;
};

struct AccuracyError : Error {
  explicit AccuracyError(const std::string& what) : Error(Kind::accuracy, what) {}
};

struct TrainingDiverged : Error {
  TrainingDiverged(const std::string& what, int epoch)
      : Error(Kind::training_diverged, what), epoch(epoch) {}
  int epoch;
};

struct CalibrationError : Error {
  explicit CalibrationError(const std::string& what) : Error(Kind::calibration, what) {}
};

/// Malformed input file. `location` is a byte offset for binary formats and a
/// 1-based line number for text formats.
struct ParseError : Error {
  ParseError(const std::string& what, std::uint64_t location)
      : Error(Kind::parse, what), location(location) {}
  std::uint64_t location;
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(Kind::io, what) {}
};

}  // namespace mgnn
