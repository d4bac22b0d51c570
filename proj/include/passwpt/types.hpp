#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace passwpt {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = 3.14159265358979323846;

enum class ErrorCode {
  NonPositiveStep,
  DimensionMismatch,
  InfeasibleAlpha,
  EmptyRegion,
  DegenerateChannel,
  InfeasibleLambda,
  Infeasible,
  NonconvexConstraint,
  SingularSystem,
  ConfigError,
  IoError,
  MissingAxis,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Transmit beamformer W, one column per IDR (N x K).
struct BeamformingMatrix {
  MatrixXcd w;

  int antennas() const { return static_cast<int>(w.rows()); }
  int users() const { return static_cast<int>(w.cols()); }
  double power() const { return w.squaredNorm(); }
};

}  // namespace passwpt
