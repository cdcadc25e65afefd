#pragma once

// Test-only oracles: adaptive Dormand-Prince integration of the Hamiltonian
// field (independent of the leapfrog under test) and the symmetric two-bump
// periodic orbit with its monodromy spectrum.

#include <Eigen/Eigenvalues>
#include <cmath>

#include "dpwlab/dynamics.hpp"

namespace dpw::testing {

template <class F>
Eigen::VectorXd rk45(const F& f, Eigen::VectorXd z, double t_end, double tol) {
  // Dormand-Prince 5(4)
  static const double c[7] = {0, 1. / 5, 3. / 10, 4. / 5, 8. / 9, 1., 1.};
  static const double a[7][6] = {
      {},
      {1. / 5},
      {3. / 40, 9. / 40},
      {44. / 45, -56. / 15, 32. / 9},
      {19372. / 6561, -25360. / 2187, 64448. / 6561, -212. / 729},
      {9017. / 3168, -355. / 33, 46732. / 5247, 49. / 176, -5103. / 18656},
      {35. / 384, 0., 500. / 1113, 125. / 192, -2187. / 6784, 11. / 84}};
  static const double b5[7] = {35. / 384,     0., 500. / 1113, 125. / 192,
                               -2187. / 6784, 11. / 84, 0.};
  static const double b4[7] = {5179. / 57600,    0.,       7571. / 16695,
                               393. / 640,       -92097. / 339200,
                               187. / 2100,      1. / 40};
  double t = 0.0;
  const double dir = t_end >= 0 ? 1.0 : -1.0;
  double h = dir * std::min(1e-3, std::abs(t_end));
  const int n = static_cast<int>(z.size());
  Eigen::MatrixXd k(n, 7);
  while (dir * (t_end - t) > 1e-15) {
    if (dir * (t + h) > dir * t_end) h = t_end - t;
    for (int s = 0; s < 7; ++s) {
      Eigen::VectorXd zs = z;
      for (int q = 0; q < s; ++q) zs += h * a[s][q] * k.col(q);
      k.col(s) = f(zs);
      (void)c;
    }
    Eigen::VectorXd z5 = z, z4 = z;
    for (int s = 0; s < 7; ++s) {
      z5 += h * b5[s] * k.col(s);
      z4 += h * b4[s] * k.col(s);
    }
    const double err = (z5 - z4).norm() / std::max(1.0, z.norm());
    if (err <= tol) {
      t += h;
      z = z5;
    }
    const double fac =
        std::clamp(0.9 * std::pow(tol / std::max(err, 1e-300), 0.2), 0.2, 5.0);
    h *= fac;
  }
  return z;
}

inline PhasePoint rk45_flow(const PotentialModel& m, const PhasePoint& p,
                            double t, double tol = 1e-12) {
  auto f = [&m](const Eigen::VectorXd& z) {
    PhasePoint q{{z(0), z(1)}, {z(2), z(3)}};
    const Vec4 v = hamilton_field(m, q);
    return Eigen::VectorXd(v);
  };
  Eigen::VectorXd z = p.packed();
  z = rk45(f, z, t, tol);
  return PhasePoint{{z(0), z(1)}, {z(2), z(3)}};
}

struct PeriodicOrbit {
  PhasePoint start;   // on the symmetry axis midpoint
  double period = 0;
  double mu_unstable = 0;  // leading monodromy eigenvalue
  double lambda = 0;       // log(mu)/period
  Mat4 monodromy;
};

// Symmetric periodic orbit of a two-bump potential with centers at (+-a, 0):
// oscillation along the x1 axis between the turning points.
inline PeriodicOrbit two_bump_orbit(const PotentialModel& m, double energy = 1.0,
                                    double dt = 5e-5) {
  PeriodicOrbit orb;
  const double V0 = evaluate_potential(m, Vec2{0.0, 0.0}).V;
  if (V0 >= energy) throw Error(ErrorCode::invalid_input, "midpoint above energy");
  orb.start = PhasePoint{{0.0, 0.0}, {std::sqrt(energy - V0), 0.0}};
  // integrate until the second return to x1 = 0 with xi1 > 0
  PhasePoint p = orb.start;
  double t = 0.0;
  int crossings = 0;
  double prev_x = 0.0;
  FlowOptions fopt;
  fopt.check_energy = false;
  for (int k = 0; k < 4000000; ++k) {
    const PhasePoint q = flow(m, p, dt, dt, fopt);
    t += dt;
    if (prev_x < 0.0 && q.x(0) >= 0.0 && q.xi(0) > 0.0) {
      // linear interpolation of the crossing time
      const double frac = -prev_x / (q.x(0) - prev_x);
      orb.period = t - dt + frac * dt;
      ++crossings;
      if (crossings >= 1) break;
    }
    prev_x = q.x(0);
    p = q;
  }
  if (orb.period <= 0.0)
    throw Error(ErrorCode::not_trapped, "no periodic orbit found");
  auto [q, tb] = variational_flow(m, orb.start, orb.period, dt, fopt);
  orb.monodromy = tb.matrix;
  Eigen::EigenSolver<Mat4> es(tb.matrix);
  double mu = 0.0;
  for (int i = 0; i < 4; ++i)
    mu = std::max(mu, std::abs(es.eigenvalues()(i)));
  orb.mu_unstable = mu;
  orb.lambda = std::log(mu) / orb.period;
  return orb;
}

// standard two-bump / three-bump test potentials (unit scale)
inline PotentialModel two_bump_model() {
  PotentialModel m;
  m.bumps = {{{-1.0, 0.0}, 1.7, 0.16}, {{1.0, 0.0}, 1.7, 0.16}};
  m.cutoff_radius = 2.2;
  m.validate();
  return m;
}

inline PotentialModel three_bump_model(double radius = 1.0, double width = 0.16,
                                       double height = 1.7,
                                       double cutoff = 2.2) {
  PotentialModel m;
  for (int k = 0; k < 3; ++k) {
    const double th = M_PI / 2 + 2.0 * M_PI * k / 3.0;
    m.bumps.push_back({{radius * std::cos(th), radius * std::sin(th)}, height,
                       width});
  }
  m.cutoff_radius = cutoff;
  m.validate();
  return m;
}

}  // namespace dpw::testing
