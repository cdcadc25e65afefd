#include "dpwlab/dynamics.hpp"

#include <cmath>

#include "dpwlab/profiles.hpp"

namespace dpw {

void PotentialModel::validate() {
  if (dimension != 2)
    throw Error(ErrorCode::configuration, "only dimension 2 is supported");
  if (!(cutoff_radius > 0.0))
    throw Error(ErrorCode::configuration, "cutoff_radius must be positive");
  double rmin = 0.0;
  for (const auto& b : bumps) {
    if (!(b.width > 0.0))
      throw Error(ErrorCode::configuration, "bump width must be positive");
    rmin = std::max(rmin, b.center.norm() + 6.0 * b.width);
  }
  if (!bumps.empty() && cutoff_radius < rmin)
    throw Error(ErrorCode::configuration,
                "cutoff_radius must be >= max(|center| + 6*width)");
  trunc_inner = bumps.empty() ? 0.95 * cutoff_radius
                              : std::min(rmin, 0.95 * cutoff_radius);
}

double PotentialModel::max_height() const {
  double s = 0.0;
  for (const auto& b : bumps) s += std::abs(b.height);
  return s;
}

double PotentialModel::max_grad_bound() const {
  double s = 0.0;
  for (const auto& b : bumps)
    s += std::abs(b.height) * std::exp(-0.5) / b.width;
  return s;
}

static void raw_bumps(const PotentialModel& m, const Vec2& x, double& V,
                      Vec2& grad, Mat2& hess, bool want_hess) {
  V = 0.0;
  grad.setZero();
  hess.setZero();
  for (const auto& b : m.bumps) {
    const Vec2 d = x - b.center;
    const double q = d.squaredNorm() / (2.0 * b.width * b.width);
    if (q > 40.0) continue;
    const double g = b.height * std::exp(-q);
    const double iw2 = 1.0 / (b.width * b.width);
    V += g;
    grad += -g * iw2 * d;
    if (want_hess)
      hess += g * iw2 * (iw2 * (d * d.transpose()) - Mat2::Identity());
  }
}

void evaluate_potential_full(const PotentialModel& m, const Vec2& x, double& V,
                             Vec2& grad, Mat2& hess) {
  if (!x.allFinite()) throw Error(ErrorCode::invalid_input, "non-finite position");
  const double r = x.norm();
  if (m.bumps.empty() || r >= m.cutoff_radius) {
    V = 0.0;
    grad.setZero();
    hess.setZero();
    return;
  }
  double Vb;
  Vec2 gb;
  Mat2 hb;
  raw_bumps(m, x, Vb, gb, hb, true);

  const double r1 = m.trunc_inner, r2 = m.cutoff_radius;
  const double c = plateau(r, r1, r2);
  if (r <= r1 || r < 1e-14) {
    V = Vb;
    grad = gb;
    hess = hb;
    return;
  }
  const double c1 = plateau_d1(r, r1, r2);
  const double c2 = plateau_d2(r, r1, r2);
  const Vec2 er = x / r;
  const Mat2 Per = (Mat2::Identity() - er * er.transpose()) / r;
  V = Vb * c;
  grad = gb * c + Vb * c1 * er;
  hess = hb * c + c1 * (gb * er.transpose() + er * gb.transpose()) +
         Vb * (c2 * (er * er.transpose()) + c1 * Per);
}

PotentialEval evaluate_potential(const PotentialModel& m, const Vec2& x) {
  double V;
  Vec2 g;
  Mat2 h;
  evaluate_potential_full(m, x, V, g, h);
  return PotentialEval{V, g};
}

double TangentBlock::symplectic_defect() const {
  const Mat4 J = symplectic_J();
  return (matrix.transpose() * J * matrix - J).cwiseAbs().maxCoeff();
}

namespace {

// One leapfrog step of size dt for xdot = 2 xi, xidot = -grad V; each half
// drift displaces by (dt/2) * 2 xi = dt * xi.
struct Stepper {
  const PotentialModel& m;
  Vec2 x, xi;

  void step(double dt) {
    x += dt * xi;
    const auto pe = evaluate_potential(m, x);
    xi -= dt * pe.grad;
    x += dt * xi;
  }

  // Exact derivative of the discrete map above: product of shears.
  void step_tangent(double dt, Mat4& M) {
    x += dt * xi;
    double V;
    Vec2 g;
    Mat2 H;
    evaluate_potential_full(m, x, V, g, H);
    xi -= dt * g;
    x += dt * xi;

    // drift: dx += dt*dxi  (applied twice with the kick between)
    Mat4 D = Mat4::Identity();
    D.block<2, 2>(0, 2) = dt * Mat2::Identity();
    Mat4 K = Mat4::Identity();
    K.block<2, 2>(2, 0) = -dt * H;
    M = D * K * D * M;
  }
};

void check_steps(double t, double step, const FlowOptions& opt) {
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_input, "step must be > 0");
  if (std::abs(t) / step > static_cast<double>(opt.max_steps))
    throw Error(ErrorCode::invalid_input, "|t|/step exceeds max_steps");
}

}  // namespace

PhasePoint flow(const PotentialModel& m, const PhasePoint& rho, double t,
                double step, const FlowOptions& opt) {
  check_steps(t, step, opt);
  if (t == 0.0) return rho;
  const long n = std::max<long>(1, std::lround(std::ceil(std::abs(t) / step)));
  const double dt = t / static_cast<double>(n);
  Stepper s{m, rho.x, rho.xi};
  const double e0 = opt.check_energy ? energy(m, rho) : 0.0;
  for (long i = 0; i < n; ++i) s.step(dt);
  PhasePoint out{s.x, s.xi};
  if (opt.check_energy) {
    const double drift = std::abs(energy(m, out) - e0);
    if (drift > opt.energy_tol)
      throw Error(ErrorCode::integration_failure,
                  "energy drift " + std::to_string(drift) + " above tolerance");
  }
  return out;
}

std::pair<PhasePoint, TangentBlock> variational_flow(const PotentialModel& m,
                                                     const PhasePoint& rho,
                                                     double t, double step,
                                                     const FlowOptions& opt) {
  check_steps(t, step, opt);
  TangentBlock tb;
  if (t == 0.0) return {rho, tb};
  const long n = std::max<long>(1, std::lround(std::ceil(std::abs(t) / step)));
  const double dt = t / static_cast<double>(n);
  Stepper s{m, rho.x, rho.xi};
  const double e0 = opt.check_energy ? energy(m, rho) : 0.0;
  for (long i = 0; i < n; ++i) s.step_tangent(dt, tb.matrix);
  PhasePoint out{s.x, s.xi};
  if (opt.check_energy) {
    const double drift = std::abs(energy(m, out) - e0);
    if (drift > opt.energy_tol)
      throw Error(ErrorCode::integration_failure,
                  "energy drift " + std::to_string(drift) + " above tolerance");
  }
  if (tb.symplectic_defect() > 1e-4)
    throw Error(ErrorCode::integration_failure, "symplecticity violation");
  return {out, tb};
}

PhasePoint flow_trace(const PotentialModel& m, const PhasePoint& rho, double t,
                      double step,
                      const std::function<bool(double, const PhasePoint&)>& cb) {
  if (t == 0.0) return rho;
  const long n = std::max<long>(1, std::lround(std::ceil(std::abs(t) / step)));
  const double dt = t / static_cast<double>(n);
  Stepper s{m, rho.x, rho.xi};
  for (long i = 0; i < n; ++i) {
    s.step(dt);
    if (!cb(dt * static_cast<double>(i + 1), PhasePoint{s.x, s.xi}))
      break;
  }
  return PhasePoint{s.x, s.xi};
}

double boundary_b(const Vec2& x) { return 1.0 / std::sqrt(1.0 + x.squaredNorm()); }

double boundary_bdot(const PhasePoint& p) {
  const double u = boundary_b(p.x);
  return -2.0 * p.x.dot(p.xi) * u * u * u;
}

double boundary_bddot(const PotentialModel& m, const PhasePoint& p) {
  const double u = boundary_b(p.x);
  const auto pe = evaluate_potential(m, p.x);
  const double xdotxi = p.x.dot(p.xi);
  // d/dt of -2(x.xi) u^3 along the flow (xdot = 2 xi, xidot = -grad V).
  return -2.0 * (2.0 * p.xi.squaredNorm() - p.x.dot(pe.grad)) * u * u * u +
         12.0 * xdotxi * xdotxi * u * u * u * u * u;
}

double default_eps0(const PotentialModel& m) {
  return 0.9 * boundary_b(Vec2{m.cutoff_radius, 0.0});
}

void check_eps0(const PotentialModel& m, double eps0) {
  if (!(eps0 > 0.0) || eps0 >= boundary_b(Vec2{m.cutoff_radius, 0.0}))
    throw Error(ErrorCode::configuration,
                "eps0 inconsistent with potential support");
}

RegionLabel classify_region(const PotentialModel& m, const PhasePoint& p,
                            double eps0) {
  check_eps0(m, eps0);
  RegionLabel lab;
  if (boundary_b(p.x) >= 0.5 * eps0) {
    lab.tag = RegionTag::interaction;
    return lab;
  }
  const double bd = boundary_bdot(p);
  lab.incoming_flag = bd >= 0.0;
  lab.outgoing_flag = bd <= 0.0;
  // tie bdot = 0 resolves as outgoing
  lab.tag = lab.outgoing_flag ? RegionTag::outer_outgoing : RegionTag::outer_incoming;
  return lab;
}

}  // namespace dpw
