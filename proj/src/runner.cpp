#include "dpwlab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

namespace dpw {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

struct CsvWriter {
  std::ofstream os;
  explicit CsvWriter(const std::string& path) : os(path) {
    if (!os) throw Error(ErrorCode::io, "cannot open " + path);
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ",";
      os << cells[i];
    }
    os << "\n";
  }
};

std::string fd(double v) { return format_double(v); }

// deterministic random layer points (rejection on the energy condition)
std::vector<PhasePoint> random_layer_points(const PotentialModel& m, int count,
                                            unsigned seed, double r_max,
                                            double energy = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ur(-r_max, r_max);
  std::uniform_real_distribution<double> ua(0.0, 2.0 * M_PI);
  std::vector<PhasePoint> out;
  while (static_cast<int>(out.size()) < count) {
    const Vec2 x{ur(gen), ur(gen)};
    const double V = evaluate_potential(m, x).V;
    const double k2 = energy - V;
    if (k2 <= 1e-6) continue;
    const double th = ua(gen);
    out.push_back({x, std::sqrt(k2) * Vec2{std::cos(th), std::sin(th)}});
  }
  return out;
}

struct LinFit {
  double slope = 0.0, intercept = 0.0, stderr_slope = 0.0;
};

LinFit linfit(const std::vector<double>& x, const std::vector<double>& y) {
  LinFit f;
  const int n = static_cast<int>(x.size());
  if (n < 2) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) return f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  if (n > 2) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = y[i] - (f.slope * x[i] + f.intercept);
      ss += e * e;
    }
    f.stderr_slope = std::sqrt(ss / (n - 2) / (sxx - sx * sx / n));
  }
  return f;
}

}  // namespace

Lab::Lab(Scenario sc) : sc_(std::move(sc)) {}
Lab::~Lab() = default;

const TrappedSample& Lab::trapped() {
  if (!trapped_) {
    TrappedSamplingSpec spec = sc_.trapped;
    trapped_ = std::make_unique<TrappedSample>(
        sample_trapped_set(sc_.potential, spec));
  }
  return *trapped_;
}

const Cover& Lab::cover() {
  if (!cover_) {
    CoverSpec cs = sc_.cover;
    cs.eps0 = sc_.eps0;
    cover_ = std::make_unique<Cover>(sc_.potential, trapped(), cs);
  }
  return *cover_;
}

const OrbitEnsemble& Lab::ensemble() {
  if (!ensemble_) {
    // deterministic subsample to keep the ensemble desk-sized
    const auto& pts = trapped().points;
    std::vector<PhasePoint> use;
    const int cap = 400;
    if (static_cast<int>(pts.size()) <= cap) {
      use = pts;
    } else {
      const double stride = static_cast<double>(pts.size()) / cap;
      for (int i = 0; i < cap; ++i)
        use.push_back(pts[static_cast<size_t>(i * stride)]);
    }
    JacobianSpec js;
    js.dt = sc_.dt;
    js.splitting = sc_.splitting;
    ensemble_ = std::make_unique<OrbitEnsemble>(
        sc_.potential, use, sc_.pressure_t_max, sc_.pressure_node_dt, js,
        std::max(1, sc_.threads));
  }
  return *ensemble_;
}

BranchFamily& Lab::branches() {
  if (!branches_) {
    BranchSpec bs = sc_.wkb;
    branches_ = std::make_unique<BranchFamily>(
        enumerate_branches(sc_.potential, cover(), sc_.xi, bs));
  }
  return *branches_;
}

const GridDpw& Lab::grid_dpw(double h) {
  auto it = grids_.find(h);
  if (it == grids_.end()) {
    const int n = sc_.grid_points_for(h);
    auto g = std::make_unique<GridDpw>(
        build_dpw_grid(sc_.potential, sc_.xi, sc_.effective_masks(), n,
                       sc_.effective_extent(), h, sc_.grid_dpw));
    it = grids_.emplace(h, std::move(g)).first;
  }
  return *it->second;
}

MeasureAtlas Lab::atlas(double h) {
  AtlasSpec as;
  as.merge_tol = sc_.merge_tol;
  return leaf_densities(branches(), cover(), h, as);
}

std::vector<std::pair<std::string, PhaseSymbol>> Lab::default_symbols(int count) {
  std::vector<std::pair<std::string, PhaseSymbol>> out;
  const auto& a1 = cover().a1_sets();
  const double rx = 0.8 * sc_.cover.eps_sec;
  for (int i = 0; i < count; ++i) {
    PhaseSymbol sym;
    if (!a1.empty()) {
      const auto& c = a1[i % a1.size()].center;
      sym.x0 = c.x;
      sym.xi0 = c.xi;
      // offset successive symbols slightly off-center
      const double off = 0.25 * rx * (i / static_cast<int>(a1.size()));
      sym.x0 += Vec2{off, -off};
    } else {
      sym.x0 = Vec2{0.0, 0.0};
      sym.xi0 = sc_.xi;
    }
    sym.rx = rx;
    sym.rxi = rx;
    out.emplace_back("sym" + std::to_string(i), sym);
  }
  return out;
}

FlowCheckResult Lab::flow_check(unsigned seed_offset) {
  FlowCheckResult res;
  const auto& m = sc_.potential;
  const double e0 = sc_.eps0 > 0.0 ? sc_.eps0 : default_eps0(m);
  const int n_pts = 1000;
  auto pts = random_layer_points(m, n_pts, sc_.seed + seed_offset,
                                 0.95 * m.cutoff_radius);
  res.points = n_pts;

  FlowOptions opt;
  opt.check_energy = false;

  // energy drift over t = 100 with the strict step; free outgoing segments
  // conserve energy exactly, so stop once the orbit has left for good
  for (const auto& p : pts) {
    const double E0 = energy(m, p);
    double drift = 0.0;
    PhasePoint cur = p;
    double t_done = 0.0;
    const double chunk = 2.0;
    while (t_done < 100.0) {
      if (cur.x.norm() > 1.05 * m.cutoff_radius && cur.x.dot(cur.xi) > 0.0)
        break;  // escaped: free flight conserves p exactly
      cur = flow(m, cur, chunk, sc_.dt_strict, opt);
      t_done += chunk;
      drift = std::max(drift, std::abs(energy(m, cur) - E0));
    }
    res.energy_drift_max = std::max(res.energy_drift_max, drift);
  }

  // symplectic defect over t = 20 (tangent of the discrete map)
  for (int i = 0; i < n_pts; ++i) {
    const auto& p = pts[i];
    auto [q, tb] = variational_flow(m, p, 20.0, sc_.dt, opt);
    res.symplectic_defect_max =
        std::max(res.symplectic_defect_max, tb.symplectic_defect());
  }

  // group law on step-aligned times
  std::mt19937_64 gen(sc_.seed + 17 + seed_offset);
  std::uniform_int_distribution<int> ks(1, 5000);
  for (int i = 0; i < 64; ++i) {
    const auto& p = pts[i % pts.size()];
    const double s = ks(gen) * sc_.dt, t = ks(gen) * sc_.dt;
    const PhasePoint a = flow(m, flow(m, p, t, sc_.dt, opt), s, sc_.dt, opt);
    const PhasePoint b = flow(m, p, s + t, sc_.dt, opt);
    res.group_law_max = std::max(res.group_law_max, a.dist(b));
  }

  // geodesic convexity: interaction-region starts never reach the incoming
  // outer region later
  for (int i = 0; i < 200; ++i) {
    const auto& p = pts[i % pts.size()];
    if (classify_region(m, p, e0).tag != RegionTag::interaction) continue;
    PhasePoint cur = p;
    bool left = false;
    for (int k = 0; k < 40; ++k) {
      cur = flow(m, cur, 0.5, sc_.dt, opt);
      const auto lab = classify_region(m, cur, e0);
      if (lab.tag == RegionTag::interaction && left) {
        // re-entry of the interaction region is fine; incoming label is not
      }
      if (lab.tag != RegionTag::interaction) {
        left = true;
        if (lab.tag == RegionTag::outer_incoming && !lab.outgoing_flag)
          res.convexity_violations += 1;
      }
    }
  }

  // escape monotonicity: b <= eps0 and bdot ~ 0 forces bddot < 0
  std::uniform_real_distribution<double> ua(0.0, 2.0 * M_PI);
  int checked = 0;
  const double r_lo = std::sqrt(std::max(0.0, 1.0 / (e0 * e0) - 1.0));
  for (int i = 0; i < 400; ++i) {
    const double r = r_lo * (1.0 + 1.5 * i / 400.0);
    const double th = ua(gen);
    const Vec2 x{r * std::cos(th), r * std::sin(th)};
    if (boundary_b(x) > e0) continue;
    // tangential momentum: bdot = 0
    const Vec2 tang{-std::sin(th), std::cos(th)};
    PhasePoint p{x, tang};
    if (std::abs(boundary_bdot(p)) > 1e-9) continue;
    ++checked;
    if (boundary_bddot(m, p) >= 0.0) res.escape_monotonicity_violations += 1;
  }
  (void)checked;
  res.pass = res.energy_drift_max <= 1e-8 &&
             res.symplectic_defect_max <= 1e-6 && res.group_law_max <= 1e-7 &&
             res.convexity_violations == 0 &&
             res.escape_monotonicity_violations == 0;
  return res;
}

PressureEstimate Lab::pressure_half() {
  auto it = sep_cache_.find(0.5);
  if (it != sep_cache_.end()) return it->second;
  std::vector<double> eps = sc_.pressure_eps;
  if (eps.empty())
    eps = {0.8 * sc_.cover.eps_sec, 0.4 * sc_.cover.eps_sec,
           0.2 * sc_.cover.eps_sec};
  std::vector<double> ts = sc_.pressure_t;
  if (ts.empty())
    for (double t = 0.25 * sc_.pressure_t_max; t <= sc_.pressure_t_max + 1e-9;
         t += 0.25 * sc_.pressure_t_max)
      ts.push_back(t);
  auto est = separated_pressure(ensemble(), 0.5, eps, ts);
  sep_cache_[0.5] = est;
  return est;
}

PressureSummary Lab::pressure_summary() {
  PressureSummary out;
  std::vector<double> eps = sc_.pressure_eps;
  if (eps.empty())
    eps = {0.8 * sc_.cover.eps_sec, 0.4 * sc_.cover.eps_sec,
           0.2 * sc_.cover.eps_sec};
  std::vector<double> ts = sc_.pressure_t;
  if (ts.empty())
    for (double t = 0.25 * sc_.pressure_t_max; t <= sc_.pressure_t_max + 1e-9;
         t += 0.25 * sc_.pressure_t_max)
      ts.push_back(t);
  std::vector<double> Ts;
  for (double t : ts)
    if (t >= sc_.t0) Ts.push_back(std::floor(t / sc_.t0) * sc_.t0);
  Ts.erase(std::unique(Ts.begin(), Ts.end()), Ts.end());
  for (double s : sc_.pressure_s) {
    out.s.push_back(s);
    out.separated.push_back(separated_pressure(ensemble(), s, eps, ts));
    sep_cache_[s] = out.separated.back();
    auto cp = cover_pressure(ensemble(), cover(), s, sc_.t0, Ts);
    out.cover_est.push_back(cp.estimate);
    if (std::abs(s - 0.5) < 1e-12) {
      out.half_weight_sum = cp.half_weight_sum;
      out.rainy_bound = std::exp(
          sc_.t0 * (out.separated.back().value + 2.0 * sc_.eps0_slack));
    }
  }
  for (size_t i = 0; i + 1 < out.s.size(); ++i)
    if (out.separated[i + 1].value >= out.separated[i].value) out.monotone = false;
  return out;
}

InclinationTrace Lab::cone_trace() {
  if (cover().a1_sets().empty())
    throw Error(ErrorCode::not_trapped, "no trapped set at this resolution");
  InclinationSpec is;
  is.gamma0 = sc_.gamma0;
  is.gamma_uns = sc_.gamma_uns;
  is.steps = std::max(12, 2 * static_cast<int>(std::ceil(4.0 / sc_.t0)));
  is.t0 = sc_.t0;
  is.dt = sc_.dt;
  is.splitting = sc_.splitting;
  is.chart = sc_.chart;
  is.leaf_halfwidth = 0.05 * sc_.cover.eps_sec;
  return inclination_trace(sc_.potential, cover().a1_sets()[0].center, is);
}

DecayReport Lab::decay_report() {
  const double p_half = pressure_half().value;
  return branch_norm_report(branches(), p_half, 0.1);
}

PushforwardSeries Lab::pushforward(const PhaseSymbol& sym) {
  return pushforward_series(sc_.potential, sc_.xi, sym, sc_.pushforward);
}

CompareSummary Lab::compare(const std::vector<double>& hs, int n_symbols) {
  CompareSummary out;
  out.hs = hs;
  auto syms = default_symbols(n_symbols);
  for (auto& [name, sym] : syms) out.symbols.push_back(name);
  std::vector<double> lx, ly;
  for (double h : hs) {
    const auto& gd = grid_dpw(h);
    MeasureAtlas at = atlas(h);
    out.flagged_pairs = static_cast<int>(at.flagged.size());
    auto rows = compare_quantum_classical(at, cover(), gd.field, syms, 1.0);
    out.rows.push_back(rows);
    double mean_gap = 0.0;
    for (const auto& r : rows) mean_gap += r.gap;
    mean_gap /= rows.size();
    lx.push_back(std::log(1.0 / h));
    ly.push_back(std::log(std::max(mean_gap, 1e-300)));
  }
  const auto f = linfit(lx, ly);
  out.trend_slope = -f.slope;  // positive slope = gap decreasing with h
  out.trend_stderr = f.stderr_slope;
  return out;
}

namespace {

void write_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path);
  os << j.dump(2) << "\n";
}

}  // namespace

int Lab::run(const std::string& sub, const std::string& out_dir) {
  const auto tic = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  std::vector<std::string> artifacts;
  bool partial = false;
  auto art = [&](const std::string& name) {
    artifacts.push_back(name);
    return out_dir + "/" + name;
  };

  // validation report precedes any compute
  {
    const auto issues = sc_.validate();
    json jv;
    jv["scenario"] = sc_.name;
    jv["config_hash"] = sc_.config_hash;
    jv["errors"] = json::array();
    for (const auto& e : issues) jv["errors"].push_back({{"field", e.field},
                                                         {"message", e.message}});
    jv["ok"] = issues.empty();
    write_json(out_dir + "/validation.json", jv);
    artifacts.push_back("validation.json");
    if (!issues.empty()) {
      last_error_ = "validation failed: " + issues.front().field + ": " +
                    issues.front().message;
      return 2;
    }
  }

  try {
    if (sub == "flow-check") {
      auto res = flow_check();
      json j;
      j["energy_drift_max"] = res.energy_drift_max;
      j["symplectic_defect_max"] = res.symplectic_defect_max;
      j["group_law_max"] = res.group_law_max;
      j["convexity_violations"] = res.convexity_violations;
      j["escape_monotonicity_violations"] = res.escape_monotonicity_violations;
      j["points"] = res.points;
      j["pass"] = res.pass;
      write_json(art("flow_check.json"), j);
    } else if (sub == "trapped-set") {
      const auto& tr = trapped();
      CsvWriter csv(art("trapped.csv"));
      csv.row({"x1", "x2", "xi1", "xi2"});
      for (const auto& p : tr.points)
        csv.row({fd(p.x(0)), fd(p.x(1)), fd(p.xi(0)), fd(p.xi(1))});
      json j;
      j["count"] = tr.points.size();
      j["T_max"] = tr.T_max;
      j["R_trap"] = tr.R_trap;
      write_json(art("trapped.json"), j);
    } else if (sub == "splitting") {
      const auto& tr = trapped();
      CsvWriter csv(art("frames.csv"));
      csv.row({"x1", "x2", "xi1", "xi2", "lambda", "cone_angle", "cond",
               "hyperbolic_ok"});
      std::vector<double> lds, las;
      std::vector<SplittingFrame> frames;
      const int cap = 200;
      const int stride =
          std::max<int>(1, static_cast<int>(tr.points.size()) / cap);
      for (size_t i = 0; i < tr.points.size(); i += stride) {
        try {
          auto fr = splitting(sc_.potential, tr.points[i], sc_.splitting);
          const double ang = direction_angle(fr.E_plus, fr.E_minus);
          csv.row({fd(fr.at.x(0)), fd(fr.at.x(1)), fd(fr.at.xi(0)),
                   fd(fr.at.xi(1)), fd(fr.lambda), fd(ang), fd(fr.cond),
                   fr.hyperbolic_ok ? "1" : "0"});
          frames.push_back(fr);
        } catch (const Error&) {
          // skipped points show up as missing rows
        }
      }
      // Hoelder proxy: angle(E+_i, E+_j) <= C d^q (logged, not asserted)
      for (size_t i = 0; i + 1 < frames.size(); ++i) {
        const double d = frames[i].at.dist(frames[i + 1].at);
        const double a =
            direction_angle(frames[i].E_plus, frames[i + 1].E_plus);
        if (d > 1e-12 && a > 1e-12) {
          lds.push_back(std::log(d));
          las.push_back(std::log(a));
        }
      }
      const auto hf = linfit(lds, las);
      json j;
      j["frames"] = frames.size();
      j["holder_exponent"] = hf.slope;
      double lam = 0.0;
      for (const auto& fr : frames) lam += fr.lambda;
      j["lambda_mean"] = frames.empty() ? 0.0 : lam / frames.size();
      write_json(art("splitting.json"), j);
    } else if (sub == "cone-trace") {
      auto tr = cone_trace();
      CsvWriter csv(art("cone_trace.csv"));
      csv.row({"k", "gamma"});
      for (size_t k = 0; k < tr.gamma.size(); ++k)
        csv.row({std::to_string(k), fd(tr.gamma[k])});
      json j;
      j["nu1"] = tr.nu1;
      j["c_infl"] = tr.c_infl;
      j["n1_steps"] = tr.n1_steps;
      j["bound_holds"] = tr.bound_holds;
      j["gamma_uns"] = sc_.gamma_uns;
      int reached = -1;
      for (size_t k = 0; k < tr.gamma.size(); ++k)
        if (tr.gamma[k] <= sc_.gamma_uns) {
          reached = static_cast<int>(k);
          break;
        }
      j["reached_step"] = reached;
      write_json(art("cone_trace.json"), j);
    } else if (sub == "pressure") {
      auto ps = pressure_summary();
      CsvWriter csv(art("pressure.csv"));
      csv.row({"method", "s", "eps", "t", "Z", "rate", "count"});
      for (size_t i = 0; i < ps.s.size(); ++i) {
        for (const auto& row : ps.separated[i].ladder)
          csv.row({"separated", fd(ps.s[i]), fd(row.eps), fd(row.t), fd(row.Z),
                   fd(row.rate), std::to_string(row.count)});
        for (const auto& row : ps.cover_est[i].ladder)
          csv.row({"cover", fd(ps.s[i]), fd(row.eps), fd(row.t), fd(row.Z),
                   fd(row.rate), std::to_string(row.count)});
      }
      json j;
      for (size_t i = 0; i < ps.s.size(); ++i) {
        json row;
        row["s"] = ps.s[i];
        row["separated"] = ps.separated[i].value;
        row["separated_uncertainty"] = ps.separated[i].uncertainty;
        row["cover"] = ps.cover_est[i].value;
        row["cover_uncertainty"] = ps.cover_est[i].uncertainty;
        j["estimates"].push_back(row);
      }
      j["monotone_in_s"] = ps.monotone;
      j["half_weight_sum"] = ps.half_weight_sum;
      j["half_weight_bound"] = ps.rainy_bound;
      write_json(art("pressure.json"), j);
    } else if (sub == "branches") {
      auto& fam = branches();
      partial = fam.budget_exceeded;
      CsvWriter csv(art("branches.csv"));
      csv.row({"word", "n", "chart", "J", "sup_a", "gamma"});
      for (const auto& r : fam.records)
        csv.row({r.word, std::to_string(r.n), std::to_string(r.chart), fd(r.J),
                 fd(r.sup_a), fd(r.gamma)});
      auto rep = decay_report();
      CsvWriter dcsv(art("decay.csv"));
      dcsv.row({"n", "sum_sup", "pressure_bound"});
      for (const auto& row : rep.rows)
        dcsv.row({std::to_string(row.n), fd(row.sum_sup), fd(row.bound)});
      json j;
      j["records"] = fam.records.size();
      j["words"] = fam.words_enumerated;
      j["budget_exceeded"] = fam.budget_exceeded;
      j["fitted_rate"] = rep.fitted_rate;
      j["pressure_bound_ok"] = rep.pressure_bound_ok;
      write_json(art("branches.json"), j);
    } else if (sub == "wkb-dpw") {
      auto& fam = branches();
      partial = fam.budget_exceeded;
      const double h = sc_.h_default;
      LocalGrid lg;
      const double r = 0.7 * sc_.cover.eps_sec;
      lg.y1_lo = -r;
      lg.y1_hi = r;
      lg.y2_lo = -r;
      lg.y2_hi = r;
      lg.n1 = 48;
      lg.n2 = 96;
      const int chart = fam.free_case ? -1 : 0;
      auto field = assemble_dpw_wkb(fam, cover(), chart, h, lg);
      // binary + sidecar
      const std::string bin = art("wkb_field.bin");
      std::ofstream os(bin, std::ios::binary);
      for (const auto& c : field.values) {
        const double re = c.real(), im = c.imag();
        os.write(reinterpret_cast<const char*>(&re), 8);
        os.write(reinterpret_cast<const char*>(&im), 8);
      }
      json side;
      side["chart"] = chart;
      side["h"] = h;
      side["grid"] = {{"y1_lo", lg.y1_lo}, {"y1_hi", lg.y1_hi},
                      {"y2_lo", lg.y2_lo}, {"y2_hi", lg.y2_hi},
                      {"n1", lg.n1},       {"n2", lg.n2}};
      side["scenario_hash"] = sc_.config_hash;
      side["l2"] = field.l2();
      write_json(art("wkb_field.bin.json"), side);
      CsvWriter csv(art("wkb_contributions.csv"));
      csv.row({"word", "sup_term"});
      for (const auto& [w, s] : field.contributions)
        csv.row({w, fd(s)});
    } else if (sub == "grid-dpw") {
      const double h = sc_.h_default;
      const auto& gd = grid_dpw(h);
      write_field(art("grid_field.bin"), gd.field, sc_.config_hash);
      artifacts.push_back("grid_field.bin.json");
      CsvWriter csv(art("grid_increments.csv"));
      csv.row({"k", "norm"});
      for (size_t k = 0; k < gd.increment_norms.size(); ++k)
        csv.row({std::to_string(k + 1), fd(gd.increment_norms[k])});
      CsvWriter hcsv(art("grid_head.csv"));
      hcsv.row({"k", "norm"});
      for (size_t k = 0; k < gd.head_norms.size(); ++k)
        hcsv.row({std::to_string(k + 1), fd(gd.head_norms[k])});
      json j;
      j["h"] = h;
      j["n"] = gd.field.n;
      j["n_iter"] = gd.n_iter;
      j["l2_plateau"] = plateau_l2(gd.field, sc_.effective_masks());
      j["residual"] = plateau_residual(sc_.potential, gd.field,
                                       sc_.effective_masks(),
                                       0.1 * sc_.potential.cutoff_radius);
      j["head_slope"] = gd.head_slope;
      j["non_convergence_warning"] = gd.non_convergence_warning;
      write_json(art("grid_dpw.json"), j);
    } else if (sub == "measure") {
      auto syms = default_symbols(1);
      auto series = pushforward(syms[0].second);
      CsvWriter csv(art("pushforward.csv"));
      csv.row({"t", "value"});
      for (size_t k = 0; k < series.times.size(); ++k)
        csv.row({fd(series.times[k]), fd(series.values[k])});
      auto at = atlas(sc_.h_default);
      CsvWriter acsv(art("atlas.csv"));
      acsv.row({"chart", "n", "word", "merged", "y", "F", "e"});
      for (const auto& lf : at.leaves)
        for (size_t k = 0; k < lf.y.size(); ++k)
          acsv.row({std::to_string(lf.chart), std::to_string(lf.n), lf.word,
                    std::to_string(lf.merged), fd(lf.y[k]), fd(lf.F[k]),
                    fd(lf.e[k])});
      bool nondec = true;
      for (size_t k = 0; k + 1 < series.values.size(); ++k)
        if (series.values[k + 1] < series.values[k] - 1e-12) nondec = false;
      json j;
      j["nondecreasing"] = nondec;
      j["domain_halfwidth"] = series.domain_halfwidth;
      j["leaves"] = at.leaves.size();
      j["flagged_pairs"] = at.flagged.size();
      j["tail_bound"] = at.tail_bound;
      write_json(art("measure.json"), j);
    } else if (sub == "compare") {
      std::vector<double> hs = sc_.h_ladder;
      if (hs.empty()) hs = {sc_.h_default};
      auto cs = compare(hs, 5);
      CsvWriter csv(art("compare.csv"));
      csv.row({"h", "symbol", "atlas", "husimi", "gap"});
      for (size_t i = 0; i < cs.hs.size(); ++i)
        for (const auto& r : cs.rows[i])
          csv.row({fd(cs.hs[i]), r.symbol, fd(r.atlas), fd(r.husimi), fd(r.gap)});
      json j;
      j["trend_slope"] = cs.trend_slope;
      j["trend_stderr"] = cs.trend_stderr;
      j["flagged_pairs"] = cs.flagged_pairs;
      write_json(art("compare.json"), j);
    } else {
      last_error_ = "unknown subcommand: " + sub;
      return 2;
    }
  } catch (const Error& e) {
    last_error_ = std::string(error_code_name(e.code)) + ": " + e.what();
    if (e.code == ErrorCode::budget) {
      partial = true;
    } else {
      json j;
      j["error"] = last_error_;
      write_json(out_dir + "/error.json", j);
      return e.code == ErrorCode::configuration ? 2 : 1;
    }
  }

  const auto toc = std::chrono::steady_clock::now();
  json man;
  man["subcommand"] = sub;
  man["scenario"] = sc_.name;
  man["config_hash"] = sc_.config_hash;
  man["version"] = "0.3.0";
  man["runtime_seconds"] =
      std::chrono::duration<double>(toc - tic).count();
  man["artifacts"] = artifacts;
  man["partial"] = partial;
  write_json(out_dir + "/manifest.json", man);
  return partial ? 3 : 0;
}

}  // namespace dpw
