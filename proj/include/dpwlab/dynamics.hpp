#pragma once

#include <functional>
#include <vector>

#include "dpwlab/types.hpp"

namespace dpw {

struct Bump {
  Vec2 center{0.0, 0.0};
  double height = 1.0;
  double width = 1.0;
};

// Sum of Gaussian bumps truncated by a C^2 radial window so that V vanishes
// identically outside |x| >= cutoff_radius.
struct PotentialModel {
  std::vector<Bump> bumps;
  double cutoff_radius = 1.0;
  int dimension = 2;

  // Inner plateau radius of the truncation window; set by validate().
  double trunc_inner = 0.0;

  void validate();
  double max_height() const;
  double max_grad_bound() const;
};

struct PotentialEval {
  double V = 0.0;
  Vec2 grad = Vec2::Zero();
};

PotentialEval evaluate_potential(const PotentialModel& m, const Vec2& x);
// V, gradient and Hessian in one pass (the tangent flow needs the Hessian).
void evaluate_potential_full(const PotentialModel& m, const Vec2& x, double& V,
                             Vec2& grad, Mat2& hess);

inline double energy(const PotentialModel& m, const PhasePoint& p) {
  return p.xi.squaredNorm() + evaluate_potential(m, p.x).V;
}

// Hamilton vector field of p = |xi|^2 + V: (2 xi, -grad V).
inline Vec4 hamilton_field(const PotentialModel& m, const PhasePoint& p) {
  const auto pe = evaluate_potential(m, p.x);
  Vec4 f;
  f << 2.0 * p.xi(0), 2.0 * p.xi(1), -pe.grad(0), -pe.grad(1);
  return f;
}

// Phase-space gradient of p: (grad V, 2 xi).
inline Vec4 energy_gradient(const PotentialModel& m, const PhasePoint& p) {
  const auto pe = evaluate_potential(m, p.x);
  Vec4 g;
  g << pe.grad(0), pe.grad(1), 2.0 * p.xi(0), 2.0 * p.xi(1);
  return g;
}

struct FlowOptions {
  double energy_tol = 1e-4;   // post-hoc drift guard
  long max_steps = 400000000; // |t|/step precondition
  bool check_energy = true;
};

// Fixed-step symplectic leapfrog (position Verlet for xdot = 2 xi,
// xidot = -grad V). t may be negative.
PhasePoint flow(const PotentialModel& m, const PhasePoint& rho, double t,
                double step, const FlowOptions& opt = {});

struct TangentBlock {
  Mat4 matrix = Mat4::Identity();
  double symplectic_defect() const;
};

// Joint propagation of the point and the linearization dPhi^t. The tangent
// matrix is the exact derivative of the discrete leapfrog map, so it is
// symplectic to roundoff for any step.
std::pair<PhasePoint, TangentBlock> variational_flow(const PotentialModel& m,
                                                     const PhasePoint& rho,
                                                     double t, double step,
                                                     const FlowOptions& opt = {});

// Callback-driven integration: cb(t, point) after every substep. Returns the
// final point. Used by orbit scans that need dense output.
PhasePoint flow_trace(const PotentialModel& m, const PhasePoint& rho, double t,
                      double step,
                      const std::function<bool(double, const PhasePoint&)>& cb);

// Boundary defining function b(x) = (1+|x|^2)^{-1/2} and its derivatives
// along the flow.
double boundary_b(const Vec2& x);
double boundary_bdot(const PhasePoint& p);
double boundary_bddot(const PotentialModel& m, const PhasePoint& p);

enum class RegionTag { interaction, outer_incoming, outer_outgoing };

struct RegionLabel {
  RegionTag tag = RegionTag::interaction;
  bool incoming_flag = false;
  bool outgoing_flag = false;
};

// eps0 consistency: supp V must sit inside {b > eps0}.
void check_eps0(const PotentialModel& m, double eps0);
double default_eps0(const PotentialModel& m);

RegionLabel classify_region(const PotentialModel& m, const PhasePoint& p,
                            double eps0);

}  // namespace dpw
