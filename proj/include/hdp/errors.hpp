#pragma once

#include <stdexcept>
#include <string>

namespace hdp {

enum class ErrorKind {
  NotSkew,
  Degenerate,
  ProjectionFailure,
  StepFailure,
  RankDeficiency,
  Inconsistent,
  DriftAlarm,
  ConfigError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotSkew: return "NotSkew";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::ProjectionFailure: return "ProjectionFailure";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::RankDeficiency: return "RankDeficiency";
    case ErrorKind::Inconsistent: return "Inconsistent";
    case ErrorKind::DriftAlarm: return "DriftAlarm";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Single exception type for the library; `kind()` tells callers what failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hdp
