#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace oamsq {

enum class ErrorKind {
  InvalidArgument,
  GridTooSmall,
  GridMismatch,
  StepTooCoarse,
  EmptyEvolution,
  DegenerateImage,
  ModelMismatch,
  NotConverged,
  UnsupportedFormat,
  CorruptFile,
  IoError,
  ConfigInvalid,
  CalibrationDiverged,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }
  // what() without the kind prefix
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

enum class WarningKind { AliasingRisk };

struct Warning {
  WarningKind kind;
  std::string message;
};

// Collects non-fatal signals raised while transforming fields. Operations
// take an optional pointer; passing nullptr drops the warnings.
class Diagnostics {
 public:
  void warn(WarningKind kind, std::string message);
  const std::vector<Warning>& warnings() const { return warnings_; }
  bool has(WarningKind kind) const;
  void merge(const Diagnostics& other);

 private:
  std::vector<Warning> warnings_;
};

}  // namespace oamsq
