#include "dpwlab/measure.hpp"

#include <algorithm>
#include <cmath>

namespace dpw {

namespace {

struct SeriesPass {
  std::vector<double> values;
  double boundary = 0.0;
};

SeriesPass series_pass(const PotentialModel& m, const Vec2& xi,
                       const PhaseSymbol& a, const PushforwardSpec& spec,
                       double R, double dx_req) {
  const int n = std::max(2, static_cast<int>(std::ceil(2.0 * R / dx_req)));
  const double dx = 2.0 * R / n;
  const int nt = static_cast<int>(std::floor(spec.t_max / spec.dt_series));
  // incoming domain: the upstream half-plane, clear of both the potential
  // support and supp a (this is what makes the series non-decreasing)
  const double R0 =
      1.1 * std::max(m.cutoff_radius, a.x0.norm() + a.rx) + 2.0 * spec.dt_series;
  SeriesPass out;
  out.values.assign(nt + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      PhasePoint p{Vec2{-R + (i + 0.5) * dx, -R + (j + 0.5) * dx}, xi};
      if (p.x.dot(xi) > -R0) continue;
      const bool edge = i == 0 || j == 0 || i == n - 1 || j == n - 1;
      double contrib = 0.0;
      for (int k = 0; k <= nt; ++k) {
        if (k > 0) {
          if (p.x.norm() - 2.0 * spec.dt_series > m.cutoff_radius &&
              evaluate_potential(m, p.x).V == 0.0) {
            p.x += 2.0 * spec.dt_series * p.xi;  // free segment, exact
          } else {
            p = flow(m, p, spec.dt_series, spec.dt_flow);
          }
        }
        const double av = a.eval(p.x, p.xi);
        out.values[k] += av * dx * dx;
        contrib += std::abs(av);
      }
      if (edge) out.boundary += contrib;
    }
  }
  return out;
}

}  // namespace

double pushforward_direct(const PotentialModel& m, const Vec2& xi,
                          const PhaseSymbol& a, double R, double dx_req) {
  const int n = std::max(2, static_cast<int>(std::ceil(2.0 * R / dx_req)));
  const double dx = 2.0 * R / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      acc += a.eval(Vec2{-R + (i + 0.5) * dx, -R + (j + 0.5) * dx}, xi) * dx * dx;
  return acc;
}

PushforwardSeries pushforward_series(const PotentialModel& m, const Vec2& xi,
                                     const PhaseSymbol& a,
                                     const PushforwardSpec& spec) {
  double R = spec.domain_halfwidth > 0.0 ? spec.domain_halfwidth
                                         : 2.0 * m.cutoff_radius + a.rx +
                                               (a.x0.norm() + 2.0 * spec.t_max);
  for (;;) {
    const SeriesPass fine = series_pass(m, xi, a, spec, R, spec.dx);
    if (fine.boundary > spec.boundary_tol) {
      R *= 1.5;
      if (R > spec.max_halfwidth)
        throw Error(ErrorCode::domain_too_small,
                    "pushforward domain keeps touching supp a");
      continue;
    }
    const SeriesPass coarse = series_pass(m, xi, a, spec, R, 2.0 * spec.dx);
    PushforwardSeries out;
    out.domain_halfwidth = R;
    const int nt = static_cast<int>(fine.values.size()) - 1;
    for (int k = 0; k <= nt; ++k) {
      out.times.push_back(k * spec.dt_series);
      out.values.push_back(fine.values[k]);
      out.noise =
          std::max(out.noise, std::abs(fine.values[k] - coarse.values[k]));
    }
    return out;
  }
}

namespace {

// max |F_i - F_j| over the y-overlap of two records; +inf if no overlap
double leaf_gap(const ChartRecord& a, const ChartRecord& b, double* overlap) {
  double mx = -1.0, ov = 0.0;
  const auto& ga = a.graph;
  const auto& gb = b.graph;
  std::vector<int> cbs(gb.comp);
  std::sort(cbs.begin(), cbs.end());
  cbs.erase(std::unique(cbs.begin(), cbs.end()), cbs.end());
  for (size_t k = 0; k + 1 < ga.y.size(); ++k) {
    if (ga.comp[k] != ga.comp[k + 1]) continue;
    const double yq = 0.5 * (ga.y[k] + ga.y[k + 1]);
    const double Fi = 0.5 * (ga.F[k] + ga.F[k + 1]);
    for (int c : cbs) {
      auto Fj = graph_value(gb, c, yq);
      if (!Fj) continue;
      mx = std::max(mx, std::abs(Fi - *Fj));
      ov += std::abs(ga.y[k + 1] - ga.y[k]);
    }
  }
  if (overlap) *overlap = ov;
  return mx < 0.0 ? 1e300 : mx;
}

bool slabs_overlap(const ChartRecord& a, const ChartRecord& b) {
  return a.y1_lo < b.y1_hi && b.y1_lo < a.y1_hi;
}

}  // namespace

MeasureAtlas leaf_densities(const BranchFamily& family, const Cover& cover,
                            double h, const AtlasSpec& spec) {
  MeasureAtlas atlas;
  atlas.h = h;
  const auto& recs = family.records;
  const int nr = static_cast<int>(recs.size());
  std::vector<int> group(nr);
  for (int i = 0; i < nr; ++i) group[i] = i;
  std::function<int(int)> find = [&](int i) {
    while (group[i] != i) i = group[i] = group[group[i]];
    return i;
  };

  for (int i = 0; i < nr; ++i) {
    for (int j = i + 1; j < nr; ++j) {
      if (recs[i].chart != recs[j].chart) continue;
      if (!slabs_overlap(recs[i], recs[j])) continue;
      double ov = 0.0;
      const double gap = leaf_gap(recs[i], recs[j], &ov);
      if (ov <= 0.0) continue;
      if (gap <= spec.merge_tol) {
        group[find(i)] = find(j);
      } else if (gap < spec.ambiguous_band * spec.merge_tol) {
        FlaggedPair fp;
        fp.word_a = recs[i].word;
        fp.word_b = recs[j].word;
        fp.chart = recs[i].chart;
        fp.separation = gap;
        atlas.flagged.push_back(fp);
      }
    }
  }

  // one atlas leaf per group: representative grid, summed amplitudes with
  // relative phases at the working h
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < nr; ++i) groups[find(i)].push_back(i);
  for (auto& [root, members] : groups) {
    // representative: largest overlap extent
    int rep = members.front();
    for (int m2 : members)
      if (recs[m2].graph.y.size() > recs[rep].graph.y.size()) rep = m2;
    const auto& gr = recs[rep].graph;
    AtlasLeaf leaf;
    leaf.chart = recs[rep].chart;
    leaf.n = recs[rep].n;
    leaf.word = recs[rep].word;
    leaf.merged = static_cast<int>(members.size());
    leaf.y1_lo = recs[rep].y1_lo;
    leaf.y1_hi = recs[rep].y1_hi;
    for (size_t k = 0; k < gr.y.size(); ++k) {
      const double yq = gr.y[k];
      Cplx sum{0.0, 0.0};
      for (int m2 : members) {
        const auto& g2 = recs[m2].graph;
        if (m2 == rep) {
          sum += g2.amp[k] * std::polar(1.0, (g2.phi[k] - gr.phi[k]) / h);
          continue;
        }
        // interpolate member amplitude and phase at yq (first component hit)
        for (size_t q = 0; q + 1 < g2.y.size(); ++q) {
          if (g2.comp[q] != g2.comp[q + 1]) continue;
          const double y0 = g2.y[q], y1 = g2.y[q + 1];
          if ((yq - y0) * (yq - y1) > 0.0 || y0 == y1) continue;
          const double t = (yq - y0) / (y1 - y0);
          const Cplx a2 = g2.amp[q] + t * (g2.amp[q + 1] - g2.amp[q]);
          const double p2 = g2.phi[q] + t * (g2.phi[q + 1] - g2.phi[q]);
          sum += a2 * std::polar(1.0, (p2 - gr.phi[k]) / h);
          break;
        }
      }
      leaf.y.push_back(yq);
      leaf.F.push_back(gr.F[k]);
      leaf.amp_sum.push_back(sum);
      leaf.e.push_back(std::norm(sum));
    }
    atlas.leaves.push_back(std::move(leaf));
  }

  // geometric tail estimate from the per-depth sums
  const auto& sums = family.depth_sup_sum;
  int n_hi = static_cast<int>(sums.size()) - 1;
  while (n_hi > 0 && sums[n_hi] <= 0.0) --n_hi;
  if (n_hi >= 2 && sums[n_hi - 1] > 0.0 && sums[n_hi] < sums[n_hi - 1]) {
    const double r = sums[n_hi] / sums[n_hi - 1];
    atlas.tail_bound = sums[n_hi] * r / (1.0 - r);
  }
  return atlas;
}

double atlas_pairing(const MeasureAtlas& atlas, const Cover& cover,
                     const PhaseSymbol& sym) {
  double acc = 0.0;
  const int n1q = 4;
  for (const auto& leaf : atlas.leaves) {
    const auto& chart = cover.a1_sets()[leaf.chart].chart;
    const double wy1 = leaf.y1_hi - leaf.y1_lo;
    if (wy1 <= 0.0) continue;
    for (size_t k = 0; k + 1 < leaf.y.size(); ++k) {
      const double dy = leaf.y[k + 1] - leaf.y[k];
      if (dy == 0.0) continue;
      const double ymid = 0.5 * (leaf.y[k] + leaf.y[k + 1]);
      const double Fmid = 0.5 * (leaf.F[k] + leaf.F[k + 1]);
      const double emid = 0.5 * (leaf.e[k] + leaf.e[k + 1]);
      if (emid <= 0.0) continue;
      double psi_int = 0.0;
      for (int q = 0; q < n1q; ++q) {
        const double y1 = leaf.y1_lo + wy1 * (q + 0.5) / n1q;
        Vec4 z;
        z << y1, ymid, 0.0, Fmid;
        const PhasePoint rho = chart.from_chart(z);
        psi_int += sym.eval(rho.x, rho.xi) * (wy1 / n1q);
      }
      acc += emid * psi_int * std::abs(dy);
    }
  }
  return acc;
}

std::vector<ComparisonRow> compare_quantum_classical(
    const MeasureAtlas& atlas, const Cover& cover, const WaveField& field,
    const std::vector<std::pair<std::string, PhaseSymbol>>& symbols,
    double husimi_width) {
  std::vector<ComparisonRow> rows;
  for (const auto& [name, sym] : symbols) {
    ComparisonRow row;
    row.symbol = name;
    row.atlas = atlas_pairing(atlas, cover, sym);
    row.husimi = husimi_pairing(field, sym, husimi_width);
    row.gap = std::abs(row.atlas - row.husimi);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dpw
