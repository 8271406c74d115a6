#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace quadmpc {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using RowVec4 = Eigen::RowVector4d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

enum class ErrorKind {
  kInvalidParameter,
  kInfeasibleReference,
  kSingularReference,
  kUnsupportedSpectrum,
  kNoSolution,
  kFeasibilityViolated,
  kInfeasibleStart,
  kDegenerateThrust,
  kAttitudeSingularity,
  kParse,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParameter: return "invalid-parameter";
    case ErrorKind::kInfeasibleReference: return "infeasible-reference";
    case ErrorKind::kSingularReference: return "singular-reference";
    case ErrorKind::kUnsupportedSpectrum: return "unsupported-spectrum";
    case ErrorKind::kNoSolution: return "no-solution";
    case ErrorKind::kFeasibilityViolated: return "feasibility-violated";
    case ErrorKind::kInfeasibleStart: return "infeasible-start";
    case ErrorKind::kDegenerateThrust: return "degenerate-thrust";
    case ErrorKind::kAttitudeSingularity: return "attitude-singularity";
    case ErrorKind::kParse: return "parse-error";
  }
  return "unknown";
}

}  // namespace quadmpc
