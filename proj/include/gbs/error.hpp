#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gbs {

enum class ErrorKind {
  RankDeficient,
  NotSymmetric,
  NotSpd,
  DomainError,
  Singular,
  DegenerateInput,
  DegenerateEigenvalues,
  OutsideSupport,
  SingularC,
  NonConvergence,
  NegativeDiff,
  Usage,
  DataFormat,
};

std::string_view to_string(ErrorKind kind);

// Every failure in the library is reported through this type; callers
// switch on kind() when they need to recover from a specific condition.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NotSpd: return "NotSpd";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::DegenerateEigenvalues: return "DegenerateEigenvalues";
    case ErrorKind::OutsideSupport: return "OutsideSupport";
    case ErrorKind::SingularC: return "SingularC";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::NegativeDiff: return "NegativeDiff";
    case ErrorKind::Usage: return "Usage";
    case ErrorKind::DataFormat: return "DataFormat";
  }
  return "Unknown";
}

}  // namespace gbs
