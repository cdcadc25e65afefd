// Acceptance suite: one line per criterion, exit code = number of failures.
// Usage: acceptance <scenario-dir> [criterion ...]

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <set>
#include <string>

#include "dpwlab/runner.hpp"
#include "support/oracles.hpp"

using namespace dpw;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Suite {
  std::string dir;
  std::map<std::string, std::unique_ptr<Lab>> labs;

  Lab& lab(const std::string& name) {
    auto it = labs.find(name);
    if (it == labs.end()) {
      auto sc = Scenario::load_file(dir + "/" + name + ".toml");
      it = labs.emplace(name, std::make_unique<Lab>(std::move(sc))).first;
    }
    return *it->second;
  }
};

// ---- criterion 1: flow kernel invariants -------------------------------
Outcome c1(Suite& s) {
  auto res = s.lab("twobump").flow_check();
  Outcome o;
  o.pass = res.energy_drift_max <= 1e-8 && res.symplectic_defect_max <= 1e-6 &&
           res.group_law_max <= 1e-7 && res.convexity_violations == 0 &&
           res.escape_monotonicity_violations == 0;
  o.detail = fmt("drift=%.2e defect=%.2e group=%.2e convex=%d escape=%d",
                 res.energy_drift_max, res.symplectic_defect_max,
                 res.group_law_max, res.convexity_violations,
                 res.escape_monotonicity_violations);
  return o;
}

// ---- criterion 2: free-flow oracle chain -------------------------------
Outcome c2(Suite& s) {
  Lab& lab = s.lab("free");
  const auto& sc = lab.scenario();
  Outcome o;
  // (a) flow exact
  PotentialModel m = sc.potential;
  const PhasePoint rho{{-0.3, 0.2}, {0.6, 0.8}};
  const PhasePoint q = flow(m, rho, 1.7, 1e-3);
  const double flow_err =
      (q.x - (rho.x + 2.0 * 1.7 * rho.xi)).norm() + (q.xi - rho.xi).norm();

  // (b) WKB assembly equals the plane wave pointwise
  auto& fam = lab.branches();
  LocalGrid lg;
  lg.y1_lo = -0.1;
  lg.y1_hi = 0.1;
  lg.y2_lo = -0.08;
  lg.y2_hi = 0.08;
  lg.n1 = 16;
  lg.n2 = 24;
  const double h = sc.h_default;
  auto field = assemble_dpw_wkb(fam, lab.cover(), -1, h, lg);
  double wkb_err = 0.0;
  for (int i = 0; i < lg.n1; ++i)
    for (int j = 0; j < lg.n2; ++j) {
      const double x1 = lg.y1_lo + (lg.y1_hi - lg.y1_lo) * (i + 0.5) / lg.n1;
      const double x2 = lg.y2_lo + (lg.y2_hi - lg.y2_lo) * (j + 0.5) / lg.n2;
      const Cplx expect =
          std::polar(1.0, (x1 * sc.xi(0) + x2 * sc.xi(1)) / h);
      wkb_err = std::max(wkb_err,
                         std::abs(field.values[i * lg.n2 + j] - expect));
    }

  // (c) grid DPW matches the plane wave on the chi plateau
  const auto& gd = lab.grid_dpw(h);
  const auto masks = sc.effective_masks();
  double num = 0.0, den = 0.0;
  for (int i = 0; i < gd.field.n; ++i)
    for (int j = 0; j < gd.field.n; ++j) {
      const Vec2 x{gd.field.x1(i), gd.field.x2(j)};
      if (masks.chi(x.norm()) < 1.0) continue;
      const Cplx expect = std::polar(1.0, x.dot(sc.xi) / h);
      num += std::norm(gd.field.at(i, j) - expect);
      den += std::norm(expect);
    }
  const double grid_err = std::sqrt(num / den);

  // (d) pushforward pairing vs direct quadrature on the aligned lattice
  PhaseSymbol a;
  a.x0 = Vec2{0.0, 0.0};
  a.xi0 = sc.xi;
  a.rx = 0.25;
  a.rxi = 0.5;
  auto series = lab.pushforward(a);
  const double direct = pushforward_direct(m, sc.xi, a, series.domain_halfwidth,
                                           sc.pushforward.dx);
  const double mu_err = std::abs(series.values.back() - direct);

  o.pass = flow_err <= 1e-10 && wkb_err <= 1e-6 && grid_err <= 1e-3 &&
           mu_err <= 1e-6;
  o.detail = fmt("flow=%.2e wkb=%.2e gridL2=%.2e mu=%.2e", flow_err, wkb_err,
                 grid_err, mu_err);
  return o;
}

// ---- criterion 3: inclination / cone contraction ------------------------
Outcome c3(Suite& s) {
  auto tr = s.lab("twobump").cone_trace();
  Outcome o;
  int hit = -1;
  for (size_t k = 0; k < tr.gamma.size(); ++k)
    if (tr.gamma[k] <= 0.1) {
      hit = static_cast<int>(k);
      break;
    }
  o.pass = tr.nu1 < 1.0 && tr.bound_holds && hit >= 0 && hit <= tr.n1_steps;
  o.detail = fmt("nu1=%.3f c=%.2e reached@%d N1=%d bound=%d", tr.nu1,
                 tr.c_infl, hit, tr.n1_steps, (int)tr.bound_holds);
  return o;
}

// ---- criterion 4: pressure oracle --------------------------------------
Outcome c4(Suite& s) {
  Outcome o;
  o.pass = true;
  ToyShift toy;
  toy.lambda = 1.0;
  for (double sv : {0.0, 0.5, 1.0}) {
    const double exact = toy.exact_pressure(sv);
    auto sep = toy_separated_pressure(toy, sv, {0.2, 0.1}, {3, 4, 5, 6, 7, 8});
    auto cov = toy_cover_pressure(toy, sv, {4, 6, 8, 10, 12});
    const double tol = 0.05 * std::max(std::abs(exact), 0.2);
    if (std::abs(sep.value - exact) > tol || std::abs(cov.value - exact) > tol)
      o.pass = false;
    o.detail += fmt("s=%.1f sep=%.3f cov=%.3f ex=%.3f; ", sv, sep.value,
                    cov.value, exact);
  }
  // two-bump: single orbit, P(s) = -s lambda within 10%, methods agree
  Lab& lab = s.lab("twobump");
  auto ps = lab.pressure_summary();
  auto orb = dpw::testing::two_bump_orbit(lab.scenario().potential);
  for (size_t i = 0; i < ps.s.size(); ++i) {
    const double sv = ps.s[i];
    const double agree_tol =
        std::max(0.05 * std::abs(ps.cover_est[i].value), 0.02);
    if (std::abs(ps.separated[i].value - ps.cover_est[i].value) > agree_tol)
      o.pass = false;
    if (sv > 0.0) {
      const double expect = -sv * orb.lambda;
      if (std::abs(ps.separated[i].value - expect) > 0.10 * std::abs(expect))
        o.pass = false;
    }
  }
  o.detail += fmt("2b: sep(1/2)=%.3f expect=%.3f", ps.separated[1].value,
                  -0.5 * orb.lambda);
  return o;
}

// ---- criterion 5: pressure sign flip ------------------------------------
Outcome c5(Suite& s) {
  auto far = s.lab("threebump_far").pressure_summary();
  auto near = s.lab("threebump_near").pressure_summary();
  const auto& pf = far.separated[1];
  const auto& pn = near.separated[1];
  Outcome o;
  o.pass = (pf.value + pf.uncertainty < 0.0) && (pn.value - pn.uncertainty > 0.0);
  o.detail = fmt("far=%.3f+-%.3f near=%.3f+-%.3f", pf.value, pf.uncertainty,
                 pn.value, pn.uncertainty);
  return o;
}

// ---- criterion 6: branch decay ------------------------------------------
Outcome c6(Suite& s) {
  Lab& lab = s.lab("threebump_far");
  auto rep = lab.decay_report();
  Outcome o;
  // geometric tail and self-consistent tail bound
  bool cauchy = true;
  const auto& rows = rep.rows;
  const double r = rep.fitted_rate;
  int tail_rows = 0;
  for (size_t k = 0; k + 1 < rows.size(); ++k) {
    if (rows[k].n < rep.fit_first_n || rows[k].sum_sup <= 0.0) continue;
    ++tail_rows;
    double tail_true = 0.0;
    for (size_t q = k + 1; q < rows.size(); ++q) tail_true += rows[q].sum_sup;
    const double tail_est = rows[k + 1].sum_sup / std::max(1e-12, 1.0 - r);
    if (tail_true > 1.3 * tail_est + 1e-12) cauchy = false;
  }
  o.pass = rep.pressure_bound_ok && r < 1.0 && cauchy && tail_rows >= 3;
  o.detail = fmt("rate=%.3f bound_ok=%d cauchy=%d rows=%d", r,
                 (int)rep.pressure_bound_ok, (int)cauchy, tail_rows);
  return o;
}

// ---- criterion 7: L2 boundedness across the ladder ----------------------
Outcome c7(Suite& s) {
  Lab& lab = s.lab("threebump_compact");
  const auto& sc = lab.scenario();
  std::vector<double> ls, lx;
  double vmin = 1e300, vmax = 0.0;
  Outcome o;
  for (double h : sc.h_ladder) {
    const auto& gd = lab.grid_dpw(h);
    const double v = plateau_l2(gd.field, sc.effective_masks());
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
    ls.push_back(std::log(v));
    lx.push_back(std::log(1.0 / h));
    o.detail += fmt("h=%.4g |E|=%.3f; ", h, v);
  }
  // regression slope vs log(1/h) consistent with zero at 2 sigma
  const int n = static_cast<int>(ls.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += lx[i];
    sy += ls[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ls[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double ss = 0.0;
  const double b = (sy - slope * sx) / n;
  for (int i = 0; i < n; ++i) {
    const double e = ls[i] - (slope * lx[i] + b);
    ss += e * e;
  }
  const double sigma =
      n > 2 ? std::sqrt(ss / (n - 2) / (sxx - sx * sx / n)) : 1e300;
  o.pass = vmax / vmin <= 2.0 && std::abs(slope) <= 2.0 * sigma;
  o.detail += fmt("ratio=%.2f slope=%.3f+-%.3f", vmax / vmin, slope, sigma);
  return o;
}

// ---- criterion 8: eigen-residual and grid refinement --------------------
Outcome c8(Suite& s) {
  Lab& lab = s.lab("threebump_compact");
  const auto& sc = lab.scenario();
  const double h = sc.h_default;
  const auto masks = sc.effective_masks();
  const int n1 = sc.grid_points_for(h);
  auto g1 = build_dpw_grid(sc.potential, sc.xi, masks, n1, sc.effective_extent(),
                           h, sc.grid_dpw);
  auto g2 = build_dpw_grid(sc.potential, sc.xi, masks, 2 * n1,
                           sc.effective_extent(), h, sc.grid_dpw);
  const double margin = 0.1 * sc.potential.cutoff_radius;
  const double r1 = plateau_residual(sc.potential, g1.field, masks, margin);
  const double r2 = plateau_residual(sc.potential, g2.field, masks, margin);
  Outcome o;
  o.pass = r1 <= 5e-3 && r1 / std::max(r2, 1e-300) >= 3.0;
  o.detail = fmt("res(n=%d)=%.2e res(n=%d)=%.2e factor=%.1f", n1, r1, 2 * n1,
                 r2, r1 / std::max(r2, 1e-300));
  return o;
}

// ---- criterion 9: measure convergence -----------------------------------
Outcome c9(Suite& s) {
  Lab& lab = s.lab("threebump_far");
  auto syms = lab.default_symbols(1);
  auto series = lab.pushforward(syms[0].second);
  auto ps = lab.pressure_summary();
  const double p1 = ps.separated[2].value;  // s = 1
  Outcome o;
  bool nondec = true;
  for (size_t k = 1; k < series.values.size(); ++k)
    if (series.values[k] < series.values[k - 1] - series.noise - 1e-12)
      nondec = false;
  // increments bounded by a fitted C e^{t P(1)} envelope (past the arrival
  // transient, above the quadrature noise)
  double C = 0.0;
  std::vector<std::pair<double, double>> incs;
  for (size_t k = 1; k < series.values.size(); ++k) {
    const double inc = series.values[k] - series.values[k - 1];
    const double t = series.times[k];
    if (inc > 2.0 * series.noise) incs.emplace_back(t, inc);
  }
  size_t arrival = incs.empty() ? 0 : 0;
  double peak = 0.0;
  for (size_t q = 0; q < incs.size(); ++q)
    if (incs[q].second > peak) {
      peak = incs[q].second;
      arrival = q;
    }
  bool envelope = p1 < 0.0 && incs.size() >= arrival + 3;
  for (size_t q = arrival; q < incs.size(); ++q)
    C = std::max(C, incs[q].second * std::exp(-p1 * incs[q].first));
  for (size_t q = arrival; q < incs.size(); ++q)
    if (incs[q].second > C * std::exp(p1 * incs[q].first) + 1e-12)
      envelope = false;
  o.pass = nondec && envelope;
  o.detail = fmt("nondec=%d P(1)=%.3f C=%.3g incs=%zu noise=%.2e", (int)nondec,
                 p1, C, incs.size(), series.noise);
  return o;
}

// ---- criterion 10: quantum-classical agreement --------------------------
Outcome c10(Suite& s) {
  Lab& lab = s.lab("threebump_compact");
  const auto& sc = lab.scenario();
  auto cs = lab.compare(sc.h_ladder, 5);
  Outcome o;
  bool dichotomy_ok = cs.flagged_pairs == 0;
  o.pass = cs.trend_slope > 2.0 * cs.trend_stderr && dichotomy_ok;
  o.detail = fmt("slope=%.3f+-%.3f flagged=%d", cs.trend_slope,
                 cs.trend_stderr, cs.flagged_pairs);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <scenario-dir> [criterion ...]\n");
    return 64;
  }
  Suite suite;
  suite.dir = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  struct Row {
    int id;
    const char* title;
    Outcome (*fn)(Suite&);
  };
  const Row rows[] = {
      {1, "flow kernel: energy drift and symplectic defect", c1},
      {2, "free-flow oracle chain", c2},
      {3, "inclination: cone contraction within the predicted steps", c3},
      {4, "pressure oracle: toy shift and single orbit", c4},
      {5, "pressure sign flip: far vs near bumps", c5},
      {6, "branch decay under the pressure envelope", c6},
      {7, "L2 boundedness of the grid DPW across the h ladder", c7},
      {8, "eigen-residual with grid refinement", c8},
      {9, "measure convergence: monotone with pressure-bounded increments", c9},
      {10, "quantum-classical agreement and leaf dichotomy", c10},
  };
  int failures = 0;
  for (const auto& row : rows) {
    if (!only.empty() && !only.count(row.id)) continue;
    const auto tic = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = row.fn(suite);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
            .count();
    std::printf("CRITERION %2d %s  %-55s [%s] (%.1fs)\n", row.id,
                o.pass ? "PASS" : "FAIL", row.title, o.detail.c_str(), dt);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures;
}
