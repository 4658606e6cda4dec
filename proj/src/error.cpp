#include "oamsq/error.hpp"

#include <algorithm>

namespace oamsq {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::GridTooSmall: return "GridTooSmall";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::StepTooCoarse: return "StepTooCoarse";
    case ErrorKind::EmptyEvolution: return "EmptyEvolution";
    case ErrorKind::DegenerateImage: return "DegenerateImage";
    case ErrorKind::ModelMismatch: return "ModelMismatch";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::CorruptFile: return "CorruptFile";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::CalibrationDiverged: return "CalibrationDiverged";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

void Diagnostics::warn(WarningKind kind, std::string message) {
  warnings_.push_back({kind, std::move(message)});
}

bool Diagnostics::has(WarningKind kind) const {
  return std::any_of(warnings_.begin(), warnings_.end(),
                     [kind](const Warning& w) { return w.kind == kind; });
}

void Diagnostics::merge(const Diagnostics& other) {
  warnings_.insert(warnings_.end(), other.warnings_.begin(), other.warnings_.end());
}

}  // namespace oamsq
