#pragma once

#include <optional>
#include <vector>

#include "dpwlab/dynamics.hpp"

namespace dpw {

struct TrappedSamplingSpec {
  double dx = 0.05;      // seed spacing in position
  int ndir = 32;         // momentum directions per seed
  double T_max = 8.0;    // forward/backward horizon
  double R_trap = 0.0;   // 0 -> auto (1.5 * cutoff radius + 1)
  double energy = 1.0;
  double dt = 2e-3;
};

struct TrappedSample {
  std::vector<PhasePoint> points;
  double T_max = 0.0;
  double R_trap = 0.0;
  double energy = 1.0;
};

// Grid seeds on the energy layer whose forward AND backward orbits stay
// within R_trap up to T_max. Empty result is a valid answer.
TrappedSample sample_trapped_set(const PotentialModel& m,
                                 const TrappedSamplingSpec& spec);

bool orbit_bounded(const PotentialModel& m, const PhasePoint& rho, double T,
                   double R, double dt);

// Largest time in [0, T] over which the orbit stays within R (forward for
// dir=+1, backward for dir=-1).
double bounded_horizon(const PotentialModel& m, const PhasePoint& rho, double T,
                       double R, double dt, int dir);

struct SplittingFrame {
  PhasePoint at;
  Vec4 e_flow = Vec4::Zero();   // H_p direction (unnormalized)
  Vec4 e_grad = Vec4::Zero();   // phase-space gradient of p
  Vec4 E_plus = Vec4::Zero();   // unit unstable direction
  Vec4 E_minus = Vec4::Zero();  // unit stable direction
  double lambda = 0.0;          // leading expansion rate (1/time)
  bool hyperbolic_ok = true;    // lambda above the configured floor
  double cond = 0.0;            // condition number of the joint frame
};

struct SplittingSpec {
  double T_win = 12.0;
  double min_window = 1.0;  // not-trapped below this bounded horizon
  double dt = 2e-3;
  double qr_dt = 0.05;
  double hyperbolic_floor = 0.05;
  double R_trap = 0.0;  // 0 -> auto
  unsigned seed = 12345;
};

// Forward/backward QR (Benettin-style) with the flow and gradient directions
// deflated at every renormalization.
SplittingFrame splitting(const PotentialModel& m, const PhasePoint& rho,
                         const SplittingSpec& spec);

// Angle between two directions in R^4, in [0, pi/2].
double direction_angle(const Vec4& a, const Vec4& b);

struct AdaptedChart {
  PhasePoint center;
  Mat4 frame = Mat4::Identity();      // columns e1 e2 f1 f2; rho = center + frame*z
  Mat4 inv = Mat4::Identity();
  double radius = 0.0;
  // Gauge potential of the affine coordinate change:
  //   dG = xi.dx - eta.dy,  G(z) = glin.z + 0.5 z^T gquad z.
  Vec4 glin = Vec4::Zero();
  Mat4 gquad = Mat4::Zero();

  Vec4 to_chart(const PhasePoint& p) const { return inv * (p.packed() - center.packed()); }
  PhasePoint from_chart(const Vec4& z) const {
    return PhasePoint::unpack(center.packed() + frame * z);
  }
  double gauge(const Vec4& z) const { return glin.dot(z) + 0.5 * z.dot(gquad * z); }
  double symplectic_defect() const;
};

struct ChartSpec {
  double radius = 0.2;
  double angle_floor = 1e-3;
};

// Symplectic basis (e1 = H_p, e2 in E+, f1 with dp(f1)=1, f2 in E-,
// omega(e_i, f_j) = delta_ij), so eta1 = p-1 to first order.
AdaptedChart build_adapted_chart(const PotentialModel& m,
                                 const SplittingFrame& frame,
                                 const ChartSpec& spec);

struct PoincareBlock {
  double A = 0.0;   // unstable (y2,y2) block of the chart-to-chart map
  double nu = 0.0;  // ||A^{-1}||
  Mat4 full = Mat4::Identity();
};

// dPhi^{t0} expressed between the charts at rho_a and Phi^{t0}(rho_a).
PoincareBlock poincare_linearization(const PotentialModel& m,
                                     const AdaptedChart& src,
                                     const AdaptedChart& dst, double t0,
                                     double dt);

}  // namespace dpw
