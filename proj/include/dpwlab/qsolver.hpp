#pragma once

#include <string>
#include <vector>

#include "dpwlab/dynamics.hpp"

namespace dpw {

struct WaveField {
  int n = 0;          // points per axis
  double extent = 0;  // box [-L/2, L/2)
  double h = 0;
  std::vector<Cplx> v;  // row-major, v[ix*n + iy]
  bool mask_applied = false;

  double dx() const { return extent / n; }
  double x1(int i) const { return -0.5 * extent + i * dx(); }
  double x2(int j) const { return -0.5 * extent + j * dx(); }
  double l2() const;
  Cplx& at(int i, int j) { return v[static_cast<size_t>(i) * n + j]; }
  const Cplx& at(int i, int j) const { return v[static_cast<size_t>(i) * n + j]; }
};

// Radial masks of the truncated-propagation identity. chi is 1 on the
// interaction plateau, chi_t is the wider cut with separation margin > 2 t0,
// chi_in the incoming-window annulus (1 exactly where (1-chi) chi_t lives).
struct MaskSpec {
  double chi_in = 0, chi_out = 0;
  double chit_in = 0, chit_out = 0;
  double tin0 = 0, tin1 = 0, tout0 = 0, tout1 = 0;

  double chi(double r) const;
  double chi_t(double r) const;
  double chi_tilde(double r) const;
  void validate(double t0, double box_halfwidth, double cutoff_radius) const;
  static MaskSpec defaults(double cutoff_radius, double box_halfwidth, double t0);
};

// Strang splitting with the exact kinetic multiplier in frequency space.
// Preconditions: dt*max|V|/h <= 0.5 and dt*(pi N/L)^2 h <= 0.5.
void split_step(const PotentialModel& m, WaveField& psi, double t, double dt);
double split_step_dt(const PotentialModel& m, const WaveField& psi,
                     double safety = 1.0);

WaveField make_field(int n, double extent, double h);
WaveField incoming_state(const Vec2& xi, const MaskSpec& masks, int n,
                         double extent, double h);

// -[P_h, chi_tilde] E_h^0, the compactly supported source of the outgoing part
WaveField commutator_source(const PotentialModel& m, const Vec2& xi,
                            const MaskSpec& masks, int n, double extent,
                            double h);

// spectral (P_h - 1) psi
WaveField schrodinger_residual(const PotentialModel& m, const WaveField& psi);

struct GridDpw {
  WaveField field;
  std::vector<double> increment_norms;  // ||(chi U)^k (1-chi) chi_t E0||
  std::vector<double> head_norms;       // masked-propagator decay of the result
  double head_slope = 0.0;              // log-slope of the head over the tail
  bool non_convergence_warning = false;
  int n_iter = 0;
};

struct GridDpwSpec {
  double t0 = 1.0;
  int n_iter = 0;        // 0 -> ceil(M log(1/h))
  double iter_factor = 2.0;  // M above
  double dt_safety = 0.9;    // fraction of the stability bound
  int head_probe = 8;        // extra masked blocks applied to the result
};

// Masked-propagator construction: sum_k (chi Utilde(t0))^k (1-chi) chi_t E0
// plus the k=0 term; Utilde = e^{i t0/h} U(t0).
GridDpw build_dpw_grid(const PotentialModel& m, const Vec2& xi,
                       const MaskSpec& masks, int n, double extent, double h,
                       const GridDpwSpec& spec);

// relative eigen-residual over the chi==1 plateau (margin inside chi_in)
double plateau_residual(const PotentialModel& m, const WaveField& psi,
                        const MaskSpec& masks, double margin);
double plateau_l2(const WaveField& psi, const MaskSpec& masks);

// C^2 compactly supported phase-space test symbol
struct PhaseSymbol {
  Vec2 x0{0, 0};
  Vec2 xi0{1, 0};
  double rx = 0.2;
  double rxi = 0.2;
  double eval(const Vec2& x, const Vec2& xi) const;
};

// Gaussian-windowed Husimi density at one phase-space point (window sigma =
// width * sqrt(h)), normalized so the phase-space integral of the density
// recovers ||psi||^2.
double husimi_point(const WaveField& psi, const Vec2& x0, const Vec2& xi0,
                    double width);

// \int symbol * husimi over phase space (midpoint quadrature on the symbol
// support).
double husimi_pairing(const WaveField& psi, const PhaseSymbol& sym,
                      double width);

void write_field(const std::string& path_bin, const WaveField& f,
                 const std::string& scenario_hash);
WaveField read_field(const std::string& path_bin);

}  // namespace dpw
