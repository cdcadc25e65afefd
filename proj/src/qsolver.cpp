#include "dpwlab/qsolver.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>

#include "dpwlab/profiles.hpp"

namespace dpw {

namespace {
std::mutex fftw_mutex;

struct Fft2 {
  int n;
  fftw_plan fwd, bwd;
  Fft2(int n_, Cplx* data) : n(n_) {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fwd = fftw_plan_dft_2d(n, n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_2d(n, n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft2() {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  void forward() { fftw_execute(fwd); }
  void backward() { fftw_execute(bwd); }
};

double kfreq(int idx, int n, double L) {
  const int s = idx <= n / 2 ? idx : idx - n;
  return 2.0 * M_PI * s / L;
}

}  // namespace

double WaveField::l2() const {
  double s = 0.0;
  for (const auto& c : v) s += std::norm(c);
  return std::sqrt(s) * dx();
}

double MaskSpec::chi(double r) const { return plateau(r, chi_in, chi_out); }
double MaskSpec::chi_t(double r) const { return plateau(r, chit_in, chit_out); }
double MaskSpec::chi_tilde(double r) const {
  return annulus(r, tin0, tin1, tout0, tout1);
}

void MaskSpec::validate(double t0, double box_halfwidth,
                        double cutoff_radius) const {
  if (!(chi_in < chi_out && chi_out < chit_in && chit_in < chit_out))
    throw Error(ErrorCode::configuration, "mask radii must be increasing");
  if (chit_in - chi_out <= 2.0 * t0)
    throw Error(ErrorCode::configuration,
                "mask separation must exceed 2*t0 (chit_in - chi_out)");
  if (chit_out >= box_halfwidth)
    throw Error(ErrorCode::configuration, "chi_t must vanish inside the box");
  if (tout1 >= box_halfwidth)
    throw Error(ErrorCode::configuration, "chi_tilde must vanish inside the box");
  if (!(tin1 <= chi_in && tout0 >= chit_out))
    throw Error(ErrorCode::configuration,
                "chi_tilde must be 1 on supp((1-chi) chi_t)");
  if (tin0 <= cutoff_radius)
    throw Error(ErrorCode::configuration,
                "chi_tilde must vanish on the interaction region");
}

MaskSpec MaskSpec::defaults(double cutoff_radius, double box_halfwidth,
                            double t0) {
  MaskSpec ms;
  const double margin = box_halfwidth - cutoff_radius;
  if (margin <= 0.0)
    throw Error(ErrorCode::configuration, "box too small for masks");
  // Most of the collar goes into the ramps: mask edges sharper than the
  // wavelength diffract, and the diffracted components outrun the ballistic
  // support estimate behind the separation condition.
  ms.chi_in = cutoff_radius + 0.10 * margin;
  ms.chi_out = ms.chi_in + 0.24 * margin;
  ms.chit_in = ms.chi_out + std::max(2.4 * t0, 0.12 * margin);
  ms.chit_out = ms.chit_in + 0.24 * margin;
  ms.tin0 = cutoff_radius + 0.004 * margin;
  ms.tin1 = ms.chi_in - 0.004 * margin;
  ms.tout0 = ms.chit_out + 0.01 * margin;
  ms.tout1 = std::min(ms.tout0 + 0.20 * margin,
                      box_halfwidth - 0.02 * margin);
  return ms;
}

WaveField make_field(int n, double extent, double h) {
  WaveField f;
  f.n = n;
  f.extent = extent;
  f.h = h;
  f.v.assign(static_cast<size_t>(n) * n, Cplx{0.0, 0.0});
  return f;
}

double split_step_dt(const PotentialModel& m, const WaveField& psi,
                     double safety) {
  const double vmax = std::max(m.max_height(), 1e-12);
  const double kin = M_PI * psi.n / psi.extent;
  const double dt_v = 0.5 * psi.h / vmax;
  const double dt_k = 0.5 / (kin * kin * psi.h);
  return safety * std::min(dt_v, dt_k);
}

void split_step(const PotentialModel& m, WaveField& psi, double t, double dt) {
  if (t == 0.0) return;
  const double vmax = m.max_height();
  const double kin = M_PI * psi.n / psi.extent;
  if (dt * vmax / psi.h > 0.5 + 1e-12 || dt * kin * kin * psi.h > 0.5 + 1e-12)
    throw Error(ErrorCode::step_size, "split-step stability precondition violated");

  const long nstep = std::max<long>(1, std::lround(std::ceil(t / dt)));
  const double hdt = t / static_cast<double>(nstep);
  const int n = psi.n;

  std::vector<double> vphase(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      vphase[static_cast<size_t>(i) * n + j] =
          evaluate_potential(m, Vec2{psi.x1(i), psi.x2(j)}).V / psi.h;
  std::vector<double> kphase(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const double k1 = kfreq(i, n, psi.extent);
    for (int j = 0; j < n; ++j) {
      const double k2 = kfreq(j, n, psi.extent);
      kphase[static_cast<size_t>(i) * n + j] = psi.h * (k1 * k1 + k2 * k2);
    }
  }

  Fft2 fft(n, psi.v.data());
  const double scale = 1.0 / (static_cast<double>(n) * n);
  auto apply_phase = [&](const std::vector<double>& ph, double fac) {
    for (size_t k = 0; k < psi.v.size(); ++k)
      psi.v[k] *= std::polar(1.0, -fac * ph[k]);
  };
  for (long s = 0; s < nstep; ++s) {
    apply_phase(vphase, 0.5 * hdt);
    fft.forward();
    apply_phase(kphase, hdt);
    fft.backward();
    for (auto& c : psi.v) c *= scale;
    apply_phase(vphase, 0.5 * hdt);
  }
}

WaveField incoming_state(const Vec2& xi, const MaskSpec& masks, int n,
                         double extent, double h) {
  if (std::abs(xi.norm() - 1.0) > 1e-9)
    throw Error(ErrorCode::invalid_input, "xi must be a unit vector");
  WaveField f = make_field(n, extent, h);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 x{f.x1(i), f.x2(j)};
      const double w = masks.chi_tilde(x.norm());
      if (w > 0.0) f.at(i, j) = w * std::polar(1.0, x.dot(xi) / h);
    }
  return f;
}

WaveField schrodinger_residual(const PotentialModel& m, const WaveField& psi) {
  WaveField out = psi;
  Fft2 fft(out.n, out.v.data());
  fft.forward();
  const int n = out.n;
  for (int i = 0; i < n; ++i) {
    const double k1 = kfreq(i, n, out.extent);
    for (int j = 0; j < n; ++j) {
      const double k2 = kfreq(j, n, out.extent);
      out.at(i, j) *= psi.h * psi.h * (k1 * k1 + k2 * k2) / (double(n) * n);
    }
  }
  fft.backward();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 x{out.x1(i), out.x2(j)};
      const double V = evaluate_potential(m, x).V;
      out.at(i, j) += (V - 1.0) * psi.at(i, j);
    }
  return out;
}

WaveField commutator_source(const PotentialModel& m, const Vec2& xi,
                            const MaskSpec& masks, int n, double extent,
                            double h) {
  // -[P, chi~] E0 = -(P(chi~ E_free) - chi~ P E_free) with E_free the plane
  // wave; evaluate spectrally on the masked plane wave and analytically on
  // the free one.
  WaveField masked = incoming_state(xi, masks, n, extent, h);
  WaveField r1 = schrodinger_residual(m, masked);  // (P-1)(chi~ e)
  WaveField out = make_field(n, extent, h);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 x{out.x1(i), out.x2(j)};
      const double w = masks.chi_tilde(x.norm());
      const double V = evaluate_potential(m, x).V;
      // chi~ (P-1) e = chi~ (|xi|^2 + V - 1) e = chi~ V e (|xi| = 1)
      const Cplx e = std::polar(1.0, x.dot(xi) / h);
      out.at(i, j) = -(r1.at(i, j) - w * V * e);
    }
  return out;
}

GridDpw build_dpw_grid(const PotentialModel& m, const Vec2& xi,
                       const MaskSpec& masks, int n, double extent, double h,
                       const GridDpwSpec& spec) {
  GridDpw out;
  out.n_iter = spec.n_iter > 0
                   ? spec.n_iter
                   : static_cast<int>(std::ceil(spec.iter_factor * std::log(1.0 / h)));
  WaveField e0 = incoming_state(xi, masks, n, extent, h);
  WaveField cur = e0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double r = Vec2{cur.x1(i), cur.x2(j)}.norm();
      cur.at(i, j) *= (1.0 - masks.chi(r)) * masks.chi_t(r);
    }
  out.field = cur;  // k = 0 term
  const double dt = split_step_dt(m, cur, spec.dt_safety);
  const double phase0 = spec.t0 / h;
  for (int k = 1; k <= out.n_iter; ++k) {
    split_step(m, cur, spec.t0, dt);
    const Cplx reph = std::polar(1.0, phase0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double r = Vec2{cur.x1(i), cur.x2(j)}.norm();
        cur.at(i, j) *= reph * masks.chi(r);
      }
    cur.mask_applied = true;
    out.increment_norms.push_back(cur.l2());
    for (size_t q = 0; q < out.field.v.size(); ++q) out.field.v[q] += cur.v[q];
  }
  // head probe: apply further masked blocks to the constructed field
  WaveField head = out.field;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double r = Vec2{head.x1(i), head.x2(j)}.norm();
      head.at(i, j) *= masks.chi_t(r);
    }
  for (int k = 0; k < spec.head_probe; ++k) {
    split_step(m, head, spec.t0, dt);
    const Cplx reph = std::polar(1.0, phase0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double r = Vec2{head.x1(i), head.x2(j)}.norm();
        head.at(i, j) *= reph * masks.chi(r);
      }
    out.head_norms.push_back(head.l2());
  }
  // trend of log head norms over the recorded tail
  if (out.head_norms.size() >= 3) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (size_t k = 0; k < out.head_norms.size(); ++k) {
      if (out.head_norms[k] <= 0.0) continue;
      const double x = static_cast<double>(k), y = std::log(out.head_norms[k]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++cnt;
    }
    if (cnt >= 2) out.head_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    out.non_convergence_warning = out.head_slope >= 0.0;
  }
  return out;
}

double plateau_residual(const PotentialModel& m, const WaveField& psi,
                        const MaskSpec& masks, double margin) {
  WaveField res = schrodinger_residual(m, psi);
  double num = 0.0, den = 0.0;
  const double rmax = masks.chi_in - margin;
  for (int i = 0; i < psi.n; ++i)
    for (int j = 0; j < psi.n; ++j) {
      const double r = Vec2{psi.x1(i), psi.x2(j)}.norm();
      if (r > rmax) continue;
      num += std::norm(res.at(i, j));
      den += std::norm(psi.at(i, j));
    }
  if (den <= 0.0) return 0.0;
  return std::sqrt(num / den);
}

double plateau_l2(const WaveField& psi, const MaskSpec& masks) {
  double s = 0.0;
  for (int i = 0; i < psi.n; ++i)
    for (int j = 0; j < psi.n; ++j) {
      const double r = Vec2{psi.x1(i), psi.x2(j)}.norm();
      if (r > masks.chi_in) continue;
      s += std::norm(psi.at(i, j));
    }
  return std::sqrt(s) * psi.dx();
}

double PhaseSymbol::eval(const Vec2& x, const Vec2& xi) const {
  return plateau((x - x0).norm(), 0.5 * rx, rx) *
         plateau((xi - xi0).norm(), 0.5 * rxi, rxi);
}

double husimi_point(const WaveField& psi, const Vec2& x0, const Vec2& xi0,
                    double width) {
  const double sigma = width * std::sqrt(psi.h);
  const double win = 6.0 * sigma;
  const int i0 = std::max(0, static_cast<int>((x0(0) - win + 0.5 * psi.extent) / psi.dx()));
  const int i1 = std::min(psi.n - 1,
                          static_cast<int>((x0(0) + win + 0.5 * psi.extent) / psi.dx()));
  const int j0 = std::max(0, static_cast<int>((x0(1) - win + 0.5 * psi.extent) / psi.dx()));
  const int j1 = std::min(psi.n - 1,
                          static_cast<int>((x0(1) + win + 0.5 * psi.extent) / psi.dx()));
  Cplx acc{0.0, 0.0};
  double gnorm = 0.0;
  for (int i = i0; i <= i1; ++i)
    for (int j = j0; j <= j1; ++j) {
      const Vec2 x{psi.x1(i), psi.x2(j)};
      const double g = std::exp(-(x - x0).squaredNorm() / (2.0 * sigma * sigma));
      gnorm += g * g;
      acc += g * std::polar(1.0, -x.dot(xi0) / psi.h) * psi.at(i, j);
    }
  gnorm = std::sqrt(gnorm) * psi.dx();
  if (gnorm <= 0.0) return 0.0;
  const double dx2 = psi.dx() * psi.dx();
  const double val = std::norm(acc * dx2 / gnorm);
  return val / std::pow(2.0 * M_PI * psi.h, 2);
}

double husimi_pairing(const WaveField& psi, const PhaseSymbol& sym,
                      double width) {
  const double sigma = width * std::sqrt(psi.h);
  const double hx = std::min(sym.rx / 6.0, sigma);
  const double hxi = std::min(sym.rxi / 6.0, sigma);
  const int nx = std::max(4, static_cast<int>(std::ceil(2.0 * sym.rx / hx)));
  const int nxi = std::max(4, static_cast<int>(std::ceil(2.0 * sym.rxi / hxi)));
  double acc = 0.0;
  const double wx = 2.0 * sym.rx / nx;
  const double wxi = 2.0 * sym.rxi / nxi;
  for (int a = 0; a < nx; ++a)
    for (int b = 0; b < nx; ++b) {
      const Vec2 x0 = sym.x0 + Vec2{-sym.rx + (a + 0.5) * wx, -sym.rx + (b + 0.5) * wx};
      for (int c = 0; c < nxi; ++c)
        for (int d = 0; d < nxi; ++d) {
          const Vec2 xi0 =
              sym.xi0 + Vec2{-sym.rxi + (c + 0.5) * wxi, -sym.rxi + (d + 0.5) * wxi};
          const double sv = sym.eval(x0, xi0);
          if (sv <= 0.0) continue;
          acc += sv * husimi_point(psi, x0, xi0, width) * wx * wx * wxi * wxi;
        }
    }
  return acc;
}

void write_field(const std::string& path_bin, const WaveField& f,
                 const std::string& scenario_hash) {
  std::ofstream os(path_bin, std::ios::binary);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path_bin);
  for (const auto& c : f.v) {
    const double re = c.real(), im = c.imag();
    os.write(reinterpret_cast<const char*>(&re), 8);
    os.write(reinterpret_cast<const char*>(&im), 8);
  }
  std::ofstream js(path_bin + ".json");
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"extent\": %.17g, \"points\": %d, \"h\": %.17g, "
                "\"scenario_hash\": \"%s\"}\n",
                f.extent, f.n, f.h, scenario_hash.c_str());
  js << buf;
}

WaveField read_field(const std::string& path_bin) {
  std::ifstream js(path_bin + ".json");
  if (!js) throw Error(ErrorCode::io, "missing sidecar for " + path_bin);
  std::string side((std::istreambuf_iterator<char>(js)),
                   std::istreambuf_iterator<char>());
  WaveField f;
  double extent = 0, h = 0;
  int n = 0;
  if (std::sscanf(side.c_str(),
                  "{\"extent\": %lg, \"points\": %d, \"h\": %lg", &extent, &n,
                  &h) != 3)
    throw Error(ErrorCode::io, "bad sidecar " + path_bin);
  f = make_field(n, extent, h);
  std::ifstream is(path_bin, std::ios::binary);
  for (auto& c : f.v) {
    double re, im;
    is.read(reinterpret_cast<char*>(&re), 8);
    is.read(reinterpret_cast<char*>(&im), 8);
    c = Cplx{re, im};
  }
  if (!is) throw Error(ErrorCode::io, "short field file " + path_bin);
  return f;
}

}  // namespace dpw
