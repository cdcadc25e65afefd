#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace dpw {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Cplx = std::complex<double>;

// A point rho = (x, xi) of T*R^2.
struct PhasePoint {
  Vec2 x{0.0, 0.0};
  Vec2 xi{0.0, 0.0};

  Vec4 packed() const {
    Vec4 z;
    z << x(0), x(1), xi(0), xi(1);
    return z;
  }
  static PhasePoint unpack(const Vec4& z) {
    return PhasePoint{{z(0), z(1)}, {z(2), z(3)}};
  }
  double dist(const PhasePoint& o) const {
    return std::sqrt((x - o.x).squaredNorm() + (xi - o.xi).squaredNorm());
  }
};

// Standard symplectic form on R^4, omega(a,b) = a_x.b_xi - a_xi.b_x.
inline Mat4 symplectic_J() {
  Mat4 J = Mat4::Zero();
  J.block<2, 2>(0, 2) = Mat2::Identity();
  J.block<2, 2>(2, 0) = -Mat2::Identity();
  return J;
}

inline double symp(const Vec4& a, const Vec4& b) {
  return a(0) * b(2) + a(1) * b(3) - a(2) * b(0) - a(3) * b(1);
}

enum class ErrorCode {
  invalid_input,
  integration_failure,
  not_trapped,
  hyperbolicity_violation,
  chart_degeneracy,
  cone_violation,
  invalid_pair,
  configuration,
  coverage,
  resolution,
  step_size,
  domain_too_small,
  budget,
  io
};

struct Error : std::runtime_error {
  ErrorCode code;
  Error(ErrorCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::integration_failure: return "integration-failure";
    case ErrorCode::not_trapped: return "not-trapped";
    case ErrorCode::hyperbolicity_violation: return "hyperbolicity-violation";
    case ErrorCode::chart_degeneracy: return "chart-degeneracy";
    case ErrorCode::cone_violation: return "cone-violation";
    case ErrorCode::invalid_pair: return "invalid-pair";
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::coverage: return "coverage";
    case ErrorCode::resolution: return "resolution";
    case ErrorCode::step_size: return "step-size";
    case ErrorCode::domain_too_small: return "domain-too-small";
    case ErrorCode::budget: return "budget";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace dpw
