#include "dpwlab/lagrangian.hpp"

#include <algorithm>
#include <cmath>

namespace dpw {

TruncatedResult propagate_truncated(const PotentialModel& m, const Cover& cover,
                                    const Leaf& start, const SymbolicWord& word,
                                    const PropagateSpec& spec_in) {
  if (word.letters.empty())
    throw Error(ErrorCode::invalid_input, "empty word");
  PropagateSpec spec = spec_in;
  const double eps_sec = cover.spec().eps_sec;
  if (spec.d_merge <= 0.0) spec.d_merge = 0.5 * eps_sec;
  if (spec.refine_gap <= 0.0) spec.refine_gap = 0.25 * eps_sec;

  TruncatedResult out;
  out.leaf = start;
  auto restrict_to = [&](Leaf& lf, const Letter& letter) {
    for (auto& s : lf.samples) {
      if (!s.alive) continue;
      if (letter.kind == CoverKind::Zero) {
        if (cover.zero_weight(s.p) <= 0.0) s.alive = false;
      } else if (cover.weight_of(s.p, letter) <= 0.0) {
        s.alive = false;
      }
    }
  };

  // replay: re-transport a seed parameter through the word prefix processed
  // so far; geometry only (m untouched), restrictions applied as membership
  int processed = 0;
  auto replay = [&](double s) {
    // linear interpolation against the two nearest original samples in s is
    // not exact for the geometry, so re-integrate from the start leaf
    // (assumes `start` came from an IncomingSeed-like dense parametrization)
    LeafSample ls;
    // find bracketing original samples and re-derive by interpolation seed:
    // the start leaf is the source of truth
    const auto& ss = start.samples;
    size_t k = 0;
    while (k + 1 < ss.size() && ss[k + 1].s < s) ++k;
    if (k + 1 >= ss.size()) {
      ls = ss.back();
    } else {
      const auto& a = ss[k];
      const auto& b = ss[k + 1];
      const double t = (s - a.s) / std::max(b.s - a.s, 1e-300);
      ls = a;
      ls.s = s;
      ls.p.x = (1 - t) * a.p.x + t * b.p.x;
      ls.p.xi = (1 - t) * a.p.xi + t * b.p.xi;
      ls.T = (1 - t) * a.T + t * b.T;
      ls.phi = (1 - t) * a.phi + t * b.phi;
      ls.m = (1 - t) * a.m + t * b.m;
      ls.p0 = energy(m, ls.p);
      ls.alive = true;
    }
    for (int kk = 0; kk <= processed; ++kk) {
      if (kk > 0) sample_flow(m, ls, spec.t_step, spec.dt);
      const Letter& letter = word.letters[kk];
      double w = letter.kind == CoverKind::Zero ? cover.zero_weight(ls.p)
                                                : cover.weight_of(ls.p, letter);
      if (w <= 0.0) {
        ls.alive = false;
        break;
      }
    }
    return ls;
  };

  restrict_to(out.leaf, word.letters[0]);
  relabel_components(out.leaf, spec.d_merge);
  for (size_t k = 1; k < word.letters.size(); ++k) {
    processed = static_cast<int>(k);
    leaf_flow(m, out.leaf, spec.t_step, spec.dt);
    restrict_to(out.leaf, word.letters[k]);
    refine_leaf(out.leaf, spec.refine_gap,
                spec.max_leaf_samples - static_cast<int>(out.leaf.samples.size()),
                replay);
    relabel_components(out.leaf, spec.d_merge);
  }

  const Letter last = word.letters.back();
  if (last.kind == CoverKind::A1 && out.leaf.n_alive() > 0) {
    const auto& chart = cover.a1_sets()[last.a1].chart;
    LagrangianGraph whole = leaf_graph(m, out.leaf, chart, false);
    // split into per-component graphs
    std::vector<int> comps;
    for (int c : whole.comp)
      if (comps.empty() || comps.back() != c) comps.push_back(c);
    std::sort(comps.begin(), comps.end());
    comps.erase(std::unique(comps.begin(), comps.end()), comps.end());
    for (int c : comps) {
      LagrangianGraph g;
      g.chart = whole.chart;
      for (size_t i = 0; i < whole.y.size(); ++i) {
        if (whole.comp[i] != c) continue;
        g.y.push_back(whole.y[i]);
        g.F.push_back(whole.F[i]);
        g.eta1.push_back(whole.eta1[i]);
        g.phi.push_back(whole.phi[i]);
        g.amp.push_back(whole.amp[i]);
        g.comp.push_back(0);
        g.s.push_back(whole.s[i]);
        g.energy_residual = std::max(g.energy_residual, std::abs(whole.eta1[i]));
      }
      for (size_t i = 0; i + 1 < g.y.size(); ++i) {
        const double dy = g.y[i + 1] - g.y[i];
        if (std::abs(dy) < 1e-14) {
          g.fold_free = false;
          continue;
        }
        g.gamma = std::max(g.gamma, std::abs((g.F[i + 1] - g.F[i]) / dy));
      }
      out.graphs.push_back(std::move(g));
    }
  }
  return out;
}

InclinationTrace inclination_trace(const PotentialModel& m,
                                   const PhasePoint& rho0,
                                   const InclinationSpec& spec) {
  InclinationTrace tr;
  // charts along the orbit
  std::vector<AdaptedChart> charts;
  PhasePoint p = rho0;
  for (int k = 0; k <= spec.steps; ++k) {
    SplittingFrame fr = splitting(m, p, spec.splitting);
    charts.push_back(build_adapted_chart(m, fr, spec.chart));
    if (k < spec.steps) p = flow(m, p, spec.t0, spec.dt);
  }
  // windowed graph transform: a slope-gamma0 graph leaf on a fixed y2
  // window, flowed one block at a time and re-graphed (and re-sampled) in
  // the chart at the advanced center
  const int ns = spec.leaf_samples;
  const double w = spec.leaf_halfwidth;
  auto build = [&](const AdaptedChart& ch,
                   const std::function<double(double)>& F,
                   const std::function<double(double)>& dF) {
    Leaf lf;
    for (int i = 0; i <= ns; ++i) {
      const double y2 = -w + 2.0 * w * i / ns;
      Vec4 z;
      z << 0.0, y2, 0.0, F(y2);
      LeafSample ls;
      ls.s = y2;
      ls.p = ch.from_chart(z);
      Vec4 tz;
      tz << 0.0, 1.0, 0.0, dF(y2);
      ls.T = ch.frame * tz;
      ls.m = 1.0;
      ls.p0 = energy(m, ls.p);
      lf.samples.push_back(ls);
    }
    return lf;
  };
  Leaf lf = build(charts[0], [&](double y) { return spec.gamma0 * y; },
                  [&](double) { return spec.gamma0; });
  tr.gamma.push_back(spec.gamma0);
  for (int k = 1; k <= spec.steps; ++k) {
    leaf_flow(m, lf, spec.t0, spec.dt);
    LagrangianGraph g = leaf_graph(m, lf, charts[k], false);
    // slope measured on the chart window only
    double gamma = 0.0;
    bool fold = false;
    for (size_t i = 0; i + 1 < g.y.size(); ++i) {
      const double ym = 0.5 * (g.y[i] + g.y[i + 1]);
      if (std::abs(ym) > w) continue;
      const double dy = g.y[i + 1] - g.y[i];
      if (std::abs(dy) < 1e-14 ||
          (g.y[i + 1] - g.y[i]) * (i + 2 < g.y.size()
                                       ? g.y[i + 2] - g.y[i + 1]
                                       : dy) < 0.0) {
        fold = true;
        continue;
      }
      gamma = std::max(gamma, std::abs((g.F[i + 1] - g.F[i]) / dy));
    }
    if (fold)
      throw Error(ErrorCode::cone_violation, "fold inside chart window");
    tr.gamma.push_back(gamma);
    if (k == spec.steps) break;
    // resample the graph on the window for the next block
    auto interp = [g](double yq) {
      for (size_t i = 0; i + 1 < g.y.size(); ++i) {
        const double y0 = g.y[i], y1 = g.y[i + 1];
        if ((yq - y0) * (yq - y1) <= 0.0 && y0 != y1)
          return g.F[i] + (yq - y0) / (y1 - y0) * (g.F[i + 1] - g.F[i]);
      }
      return g.F.empty() ? 0.0 : g.F.front();
    };
    auto dinterp = [g](double yq) {
      for (size_t i = 0; i + 1 < g.y.size(); ++i) {
        const double y0 = g.y[i], y1 = g.y[i + 1];
        if ((yq - y0) * (yq - y1) <= 0.0 && y0 != y1)
          return (g.F[i + 1] - g.F[i]) / (y1 - y0);
      }
      return 0.0;
    };
    lf = build(charts[k], interp, dinterp);
  }
  // fitted one-step recursion bound gamma_{k+1} <= nu1 gamma_k + c
  double gmin = tr.gamma[0];
  for (double g : tr.gamma) gmin = std::min(gmin, g);
  tr.c_infl = 1.5 * gmin + 1e-12;
  double nu = 0.0;
  for (size_t k = 0; k + 1 < tr.gamma.size(); ++k) {
    if (tr.gamma[k] <= 4.0 * tr.c_infl) continue;
    nu = std::max(nu, (tr.gamma[k + 1] - tr.c_infl) / tr.gamma[k]);
  }
  tr.nu1 = std::max(nu, 1e-6);
  tr.bound_holds = true;
  for (size_t k = 0; k + 1 < tr.gamma.size(); ++k)
    if (tr.gamma[k + 1] > tr.nu1 * tr.gamma[k] + tr.c_infl + 1e-12)
      tr.bound_holds = false;
  if (tr.nu1 < 1.0 && spec.gamma_uns > 0.0 && spec.gamma0 > 0.0) {
    const double q = std::log(spec.gamma_uns / (4.0 * spec.gamma0)) /
                     std::log(0.5 * (1.0 + tr.nu1));
    tr.n1_steps = static_cast<int>(std::floor(q)) + 1;
  }
  return tr;
}

std::vector<SeparationEntry> leaf_separation(
    const std::vector<LagrangianGraph>& leaves, double equal_tol,
    double merge_tol) {
  std::vector<SeparationEntry> out;
  auto comps_of = [](const LagrangianGraph& g) {
    std::vector<int> cs(g.comp);
    std::sort(cs.begin(), cs.end());
    cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
    return cs;
  };
  for (size_t i = 0; i < leaves.size(); ++i) {
    for (size_t j = i; j < leaves.size(); ++j) {
      SeparationEntry e;
      e.i = static_cast<int>(i);
      e.j = static_cast<int>(j);
      double mn = 1e300, mx = 0.0, ov = 0.0;
      const auto& gi = leaves[i];
      const auto& gj = leaves[j];
      const auto cj_list = comps_of(gj);
      for (size_t k = 0; k + 1 < gi.y.size(); ++k) {
        if (gi.comp[k] != gi.comp[k + 1]) continue;
        const double yq = 0.5 * (gi.y[k] + gi.y[k + 1]);
        const double Fi = 0.5 * (gi.F[k] + gi.F[k + 1]);
        for (int cj : cj_list) {
          auto Fj = graph_value(gj, cj, yq);
          if (!Fj) continue;
          const double d = std::abs(Fi - *Fj);
          mn = std::min(mn, d);
          mx = std::max(mx, d);
          ov += std::abs(gi.y[k + 1] - gi.y[k]);
        }
      }
      if (ov <= 0.0) {
        e.verdict = PairVerdict::disjoint;
      } else {
        e.min_sep = mn;
        e.max_sep = mx;
        e.overlap = ov;
        if (mx <= equal_tol)
          e.verdict = PairVerdict::equal;
        else if (mn >= merge_tol)
          e.verdict = PairVerdict::separated;
        else
          e.verdict = PairVerdict::ambiguous;
      }
      out.push_back(e);
    }
  }
  return out;
}

double transversality_angle(const PotentialModel& m, const LagrangianGraph& g,
                            const SplittingFrame& frame) {
  double best = M_PI;
  const Vec4 sdir = frame.E_minus.normalized();
  for (size_t k = 0; k + 1 < g.y.size(); ++k) {
    if (g.comp[k] != g.comp[k + 1]) continue;
    Vec4 za, zb;
    za << 0.0, g.y[k], g.eta1[k], g.F[k];
    zb << 0.0, g.y[k + 1], g.eta1[k + 1], g.F[k + 1];
    const Vec4 tang =
        (g.chart->from_chart(zb).packed() - g.chart->from_chart(za).packed())
            .normalized();
    const Vec4 hp =
        hamilton_field(m, g.chart->from_chart(za)).normalized();
    // component of sdir orthogonal to span{tang, hp}
    Eigen::Matrix<double, 4, 2> B;
    B.col(0) = tang;
    B.col(1) = (hp - hp.dot(tang) * tang).normalized();
    const Vec4 r = sdir - B * (B.transpose() * sdir);
    best = std::min(best, std::asin(std::min(1.0, r.norm())));
  }
  return best;
}

}  // namespace dpw
