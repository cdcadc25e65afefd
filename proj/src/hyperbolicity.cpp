#include "dpwlab/hyperbolicity.hpp"

#include <cmath>
#include <random>

namespace dpw {

double bounded_horizon(const PotentialModel& m, const PhasePoint& rho, double T,
                       double R, double dt, int dir) {
  const double r_free = 1.05 * m.cutoff_radius;
  double horizon = T;
  auto probe = [&](double t, const PhasePoint& p) {
    const bool out = p.x.norm() > R ||
                     (p.x.norm() > r_free && dir * p.x.dot(p.xi) > 0.0);
    if (out) {
      horizon = t;
      return false;
    }
    return true;
  };
  flow_trace(m, rho, dir > 0 ? T : -T, dt, probe);
  return horizon;
}

bool orbit_bounded(const PotentialModel& m, const PhasePoint& rho, double T,
                   double R, double dt) {
  return bounded_horizon(m, rho, T, R, dt, +1) >= T &&
         bounded_horizon(m, rho, T, R, dt, -1) >= T;
}

TrappedSample sample_trapped_set(const PotentialModel& m,
                                 const TrappedSamplingSpec& spec) {
  if (!(spec.T_max > 0.0) || !(spec.dt > 0.0))
    throw Error(ErrorCode::invalid_input, "T_max and dt must be positive");
  TrappedSample out;
  out.T_max = spec.T_max;
  out.energy = spec.energy;
  out.R_trap = spec.R_trap > 0.0 ? spec.R_trap : 1.5 * m.cutoff_radius + 1.0;

  const double R = m.cutoff_radius;
  const int nx = 2 * std::max(1, static_cast<int>(std::floor(R / spec.dx)));
  for (int i = 0; i <= nx; ++i) {
    for (int j = 0; j <= nx; ++j) {
      Vec2 x{-R + 2.0 * R * i / nx, -R + 2.0 * R * j / nx};
      if (x.norm() > R) continue;
      const double V = evaluate_potential(m, x).V;
      const double k2 = spec.energy - V;
      if (k2 <= 1e-12) continue;
      const double k = std::sqrt(k2);
      for (int a = 0; a < spec.ndir; ++a) {
        const double th = 2.0 * M_PI * a / spec.ndir;
        PhasePoint rho{x, Vec2{k * std::cos(th), k * std::sin(th)}};
        if (orbit_bounded(m, rho, spec.T_max, out.R_trap, spec.dt))
          out.points.push_back(rho);
      }
    }
  }
  return out;
}

double direction_angle(const Vec4& a, const Vec4& b) {
  const double c = std::abs(a.normalized().dot(b.normalized()));
  return std::acos(std::min(1.0, c));
}

namespace {

void deflate(Vec4& v, const Vec4& h, const Vec4& g) {
  const Vec4 hn = h.normalized();
  const Vec4 gn = g.normalized();
  v -= v.dot(hn) * hn;
  v -= v.dot(gn) * gn;
}

// Push a single transverse direction along the orbit of rho over [0, T]
// (T may be negative), deflating against the flow and gradient directions at
// every QR interval. Returns the final unit vector and the mean log growth.
std::pair<Vec4, double> push_direction(const PotentialModel& m,
                                       const PhasePoint& rho, Vec4 v, double T,
                                       double dt, double qr_dt) {
  const int nseg = std::max(1, static_cast<int>(std::ceil(std::abs(T) / qr_dt)));
  const double seg = T / nseg;
  PhasePoint p = rho;
  double logsum = 0.0;
  deflate(v, hamilton_field(m, p), energy_gradient(m, p));
  v.normalize();
  FlowOptions fopt;
  fopt.check_energy = false;
  for (int k = 0; k < nseg; ++k) {
    auto [pn, tb] = variational_flow(m, p, seg, dt, fopt);
    v = tb.matrix * v;
    p = pn;
    deflate(v, hamilton_field(m, p), energy_gradient(m, p));
    const double n = v.norm();
    if (!(n > 0.0))
      throw Error(ErrorCode::hyperbolicity_violation, "transverse direction collapsed");
    logsum += std::log(n);
    v /= n;
  }
  return {v, logsum / std::abs(T)};
}

}  // namespace

SplittingFrame splitting(const PotentialModel& m, const PhasePoint& rho,
                         const SplittingSpec& spec) {
  const double R = spec.R_trap > 0.0 ? spec.R_trap : 1.5 * m.cutoff_radius + 1.0;
  // bounded windows available at this point (grid samples of the trapped set
  // sit close to, not on, invariant orbits)
  const double margin = 2.0 * spec.qr_dt;
  const double Tf = bounded_horizon(m, rho, spec.T_win, R, spec.dt, +1) - margin;
  const double Tb = bounded_horizon(m, rho, spec.T_win, R, spec.dt, -1) - margin;
  if (Tf < spec.min_window || Tb < spec.min_window)
    throw Error(ErrorCode::not_trapped, "orbit escapes before the minimal window");

  SplittingFrame f;
  f.at = rho;
  f.e_flow = hamilton_field(m, rho);
  f.e_grad = energy_gradient(m, rho);

  std::mt19937_64 gen(spec.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec4 v0;
  for (int i = 0; i < 4; ++i) v0(i) = nd(gen);

  FlowOptions fopt;
  fopt.check_energy = false;

  // E+ at rho: push a generic vector forward from Phi^{-Tb}(rho).
  const PhasePoint back = flow(m, rho, -Tb, spec.dt, fopt);
  f.E_plus = push_direction(m, back, v0, Tb, spec.dt, spec.qr_dt).first;
  // E- at rho: push backward from Phi^{+Tf}(rho).
  const PhasePoint fwd = flow(m, rho, Tf, spec.dt, fopt);
  f.E_minus = push_direction(m, fwd, v0, -Tf, spec.dt, spec.qr_dt).first;

  // rate: forward growth of E+ along [0, Tf]
  f.lambda = push_direction(m, rho, f.E_plus, Tf, spec.dt, spec.qr_dt).second;
  f.hyperbolic_ok = f.lambda >= spec.hyperbolic_floor;

  Mat4 B;
  B.col(0) = f.e_flow.normalized();
  B.col(1) = f.e_grad.normalized();
  B.col(2) = f.E_plus;
  B.col(3) = f.E_minus;
  Eigen::JacobiSVD<Mat4> svd(B);
  f.cond = svd.singularValues()(0) / std::max(svd.singularValues()(3), 1e-300);
  return f;
}

double AdaptedChart::symplectic_defect() const {
  const Mat4 J = symplectic_J();
  return (frame.transpose() * J * frame - J).cwiseAbs().maxCoeff();
}

AdaptedChart build_adapted_chart(const PotentialModel& m,
                                 const SplittingFrame& fr,
                                 const ChartSpec& spec) {
  if (direction_angle(fr.E_plus, fr.E_minus) < spec.angle_floor)
    throw Error(ErrorCode::chart_degeneracy, "stable/unstable cone angle below floor");

  const Vec4 g = fr.e_grad;
  auto dp = [&g](const Vec4& v) { return g.dot(v); };

  const Vec4 e1 = fr.e_flow;
  // deflect E+/E- onto the energy layer (dp = 0), then normalize e2
  Vec4 u = fr.E_plus;
  u -= dp(u) / dp(g) * g;
  const Vec4 e2 = u.normalized();
  Vec4 s = fr.E_minus;
  s -= dp(s) / dp(g) * g;
  const double w = symp(e2, s);
  if (std::abs(w) < 1e-12)
    throw Error(ErrorCode::chart_degeneracy, "omega(E+, E-) vanishes");
  const Vec4 f2 = s / w;

  Vec4 f1 = g / dp(g);        // dp(f1) = 1
  f1 += symp(f2, f1) * e2;    // kills omega(f2, f1) since omega(f2, e2) = -1
  f1 -= symp(e2, f1) * f2;    // kills omega(e2, f1) since omega(e2, f2) = +1

  AdaptedChart ch;
  ch.center = fr.at;
  ch.frame.col(0) = e1;
  ch.frame.col(1) = e2;
  ch.frame.col(2) = f1;
  ch.frame.col(3) = f2;
  ch.inv = ch.frame.inverse();
  ch.radius = spec.radius;

  // Gauge of the affine coordinate change: with x(z) = x_a + Sx z and
  // xi(z) = xi_a + Sxi z, the 1-form xi.dx - eta.dy has coefficients
  // c_j(z) = xi_a.Sx_j + z^T Sxi^T Sx_j - (eta.dy)_j, so G is quadratic.
  Eigen::Matrix<double, 2, 4> Sx = ch.frame.topRows<2>();
  Eigen::Matrix<double, 2, 4> Sxi = ch.frame.bottomRows<2>();
  ch.glin = Sx.transpose() * fr.at.xi;
  Mat4 D = Mat4::Zero();
  D(0, 2) = 1.0;
  D(1, 3) = 1.0;
  const Mat4 A = Sx.transpose() * Sxi - D;
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-8)
    throw Error(ErrorCode::chart_degeneracy, "chart gauge not closed (frame not symplectic)");
  ch.gquad = 0.5 * (A + A.transpose());
  return ch;
}

PoincareBlock poincare_linearization(const PotentialModel& m,
                                     const AdaptedChart& src,
                                     const AdaptedChart& dst, double t0,
                                     double dt) {
  auto [end, tb] = variational_flow(m, src.center, t0, dt);
  if (end.dist(dst.center) > 1e-3 * std::max(1.0, dst.center.packed().norm()) + 1e-6)
    throw Error(ErrorCode::invalid_pair, "chart centers not on the same orbit");
  PoincareBlock pb;
  pb.full = dst.inv * tb.matrix * src.frame;
  pb.A = pb.full(1, 1);
  pb.nu = 1.0 / std::max(std::abs(pb.A), 1e-300);
  return pb;
}

}  // namespace dpw
