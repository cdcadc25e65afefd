#include "dpwlab/wkb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>

namespace dpw {

namespace {

struct Branch {
  SymbolicWord word;
  Leaf leaf;
  double station = 0.0;  // entry section offset tau
  double J = 1.0;
  int first_deep_a2 = -1;
};

// product of zero-region weights along the free backward history; the mass
// of the incoming wave not yet captured by any cover letter
double uncaptured_factor(const Cover& cover, const PhasePoint& p, double t0) {
  double q = 1.0;
  PhasePoint b = p;
  for (int i = 0; i < 100000; ++i) {
    b.x -= 2.0 * t0 * b.xi;
    const double pz = cover.zero_weight(b);
    q *= pz;
    if (q <= 0.0) return 0.0;
    if (pz >= 1.0 - 1e-14) break;
  }
  return q;
}

// conservative sup-|a| estimate in the x frame (det floored near caustics)
double amp_bound(const Branch& br) {
  double best = 0.0;
  for (const auto& ls : br.leaf.samples) {
    if (!ls.alive) continue;
    const double det = std::max(std::abs(ls.proj_det()), 1e-4);
    best = std::max(best, ls.m / det);
  }
  return std::sqrt(best);
}

bool fully_outgoing(const PotentialModel& m, const Branch& br) {
  for (const auto& ls : br.leaf.samples) {
    if (!ls.alive) continue;
    if (!(ls.p.x.norm() > 1.05 * m.cutoff_radius && ls.p.x.dot(ls.p.xi) > 0.0))
      return false;
  }
  return true;
}

}  // namespace

double AssembledField::l2() const {
  const double dy1 = (grid.y1_hi - grid.y1_lo) / grid.n1;
  const double dy2 = (grid.y2_hi - grid.y2_lo) / grid.n2;
  double s = 0.0;
  for (const auto& v : values) s += std::norm(v);
  return std::sqrt(s * dy1 * dy2);
}

BranchFamily enumerate_branches(const PotentialModel& model, const Cover& cover,
                                const Vec2& xi, const BranchSpec& spec_in) {
  BranchSpec spec = spec_in;
  const double eps_sec = cover.spec().eps_sec;
  if (spec.refine_gap <= 0.0) spec.refine_gap = 0.25 * eps_sec;
  if (spec.d_merge <= 0.0) spec.d_merge = 0.5 * eps_sec;
  if (spec.seed_halfwidth <= 0.0) spec.seed_halfwidth = 1.5 * model.cutoff_radius;

  BranchFamily fam;
  fam.xi = xi;
  fam.t0 = spec.t0;
  fam.depth_sup_sum.assign(spec.n_max + 1, 0.0);

  if (cover.a1_sets().empty()) {
    fam.free_case = true;
    return fam;
  }

  // entry band: where the zero weight transitions
  const double eps0 = cover.eps0();
  auto r_of_b = [](double b) { return std::sqrt(std::max(0.0, 1.0 / (b * b) - 1.0)); };
  const double r_hi = r_of_b(0.45 * eps0);  // just outside the band
  const double r_lo = r_of_b(0.5 * eps0);
  const double step_len = 2.0 * spec.t0 * xi.norm();

  // transient prefix/suffix allowance for the word admissibility rule
  if (spec.n_pre <= 0)
    spec.n_pre = static_cast<int>(std::ceil((r_hi + 2.0 * step_len) / step_len)) + 8;
  if (spec.n_suf <= 0) spec.n_suf = spec.n_pre;

  // entry sections: stations across the capture band (and slightly inside,
  // where the uncaptured factor cuts off by itself)
  std::deque<Branch> frontier;
  auto try_cap = [&](long more) {
    if (fam.words_enumerated + more > spec.branch_cap) {
      fam.budget_exceeded = true;
      return true;
    }
    return false;
  };

  const double tau_start = -(r_hi + 2.0 * step_len);
  const double tau_stop = -std::max(r_lo - 4.0 * step_len, 0.0);
  for (double tau = tau_start; tau <= tau_stop; tau += step_len) {
    IncomingSeed seed{xi, tau};
    Leaf lf = make_incoming_leaf(seed, -spec.seed_halfwidth, spec.seed_halfwidth,
                                 spec.seed_samples);
    // per-letter capture at this station
    std::map<Letter, Leaf> captured;
    for (const auto& ls : lf.samples) {
      const double q = uncaptured_factor(cover, ls.p, spec.t0);
      if (q <= 0.0) continue;
      for (const auto& lw : cover.weights(ls.p)) {
        if (lw.letter.kind == CoverKind::Zero) continue;
        const double w = lw.w * q;
        if (w <= 1e-14) continue;
        LeafSample c = ls;
        c.m *= w * w;
        captured[lw.letter].samples.push_back(c);
      }
    }
    for (auto& [letter, cap] : captured) {
      Branch br;
      br.word.letters.push_back(letter);
      br.leaf = std::move(cap);
      br.station = tau;
      if (letter.kind == CoverKind::A2 && 1 >= spec.n_pre) br.first_deep_a2 = 0;
      relabel_components(br.leaf, spec.d_merge);
      frontier.push_back(std::move(br));
      ++fam.words_enumerated;
    }
    if (try_cap(0)) return fam;
  }

  // replay for refinement: re-transport a seed parameter through the word
  auto make_replay = [&](const Branch& br) {
    const SymbolicWord word = br.word;
    const double tau = br.station;
    return [&model, &cover, word, tau, &spec, xi](double s) {
      IncomingSeed seed{xi, tau};
      LeafSample ls = seed.sample(s);
      const double q = uncaptured_factor(cover, ls.p, spec.t0);
      for (size_t k = 0; k < word.letters.size(); ++k) {
        if (k > 0) sample_flow(model, ls, spec.t0, spec.dt);
        double w = cover.weight_of(ls.p, word.letters[k]);
        if (k == 0) w *= q;
        ls.m *= w * w;
        if (!(ls.m > 0.0)) {
          ls.alive = false;
          ls.m = 0.0;
          break;
        }
      }
      return ls;
    };
  };

  // breadth-first over depth
  while (!frontier.empty()) {
    Branch br = std::move(frontier.front());
    frontier.pop_front();
    fam.branches_peak = std::max(fam.branches_peak,
                                 static_cast<long>(frontier.size()) + 1);
    const int n = static_cast<int>(br.word.letters.size());

    if (refine_leaf(br.leaf, spec.refine_gap,
                    spec.max_leaf_samples - static_cast<int>(br.leaf.samples.size()),
                    make_replay(br)) > 0)
      relabel_components(br.leaf, spec.d_merge);

    // record at A1 charts
    const Letter last = br.word.letters.back();
    if (last.kind == CoverKind::A1) {
      const auto& a1 = cover.a1_sets()[last.a1];
      ChartRecord rec;
      rec.chart = last.a1;
      rec.n = n;
      rec.word = br.word.str();
      rec.J = br.J;
      rec.graph = leaf_graph(model, br.leaf, a1.chart, false);
      rec.gamma = rec.graph.gamma;
      rec.sup_a = rec.graph.sup_amp();
      if (rec.sup_a > 0.0) {
        // y1 slab this prefix represents
        double y1c = 0.0, v1 = 0.0;
        int cnt = 0;
        for (const auto& ls : br.leaf.samples) {
          if (!ls.alive) continue;
          const Vec4 z = a1.chart.to_chart(ls.p);
          rec.y1.push_back(z(0));
          y1c += z(0);
          v1 += (a1.chart.inv * hamilton_field(model, ls.p))(0);
          ++cnt;
        }
        y1c /= cnt;
        v1 = std::abs(v1 / cnt);
        rec.y1_lo = y1c - 0.5 * v1 * spec.t0;
        rec.y1_hi = y1c + 0.5 * v1 * spec.t0;
        if (n <= spec.n_max) fam.depth_sup_sum[n] += rec.sup_a;
        fam.records.push_back(std::move(rec));
      }
    }

    const bool dbg = std::getenv("DPW_DEBUG_WKB") != nullptr;
    if (n >= spec.n_max) {
      if (dbg) std::fprintf(stderr, "nmax-stop %s\n", br.word.str().c_str());
      continue;
    }
    if (br.first_deep_a2 >= 0 && n - br.first_deep_a2 > spec.n_suf) {
      if (dbg) std::fprintf(stderr, "a2-deadline %s\n", br.word.str().c_str());
      continue;
    }

    // one block: flow, then split over the letters present
    Leaf flowed = br.leaf;
    leaf_flow(model, flowed, spec.t0, spec.dt);

    // Letter-transition boundaries along the leaf hide exponentially thin
    // trapped filaments; bisect them (replaying from the seed) down to the
    // double-precision floor in the seed parameter.
    {
      auto base_replay = make_replay(br);
      auto flowed_replay = [&](double sv) {
        LeafSample ls = base_replay(sv);
        if (ls.alive) sample_flow(model, ls, spec.t0, spec.dt);
        return ls;
      };
      auto support = [&](const LeafSample& ls) {
        std::vector<Letter> out;
        if (!ls.alive) return out;
        for (const auto& lw : cover.weights(ls.p))
          if (lw.w > 1e-14) out.push_back(lw.letter);
        return out;
      };
      int budget = spec.max_leaf_samples - static_cast<int>(flowed.samples.size());
      bool changed = true;
      std::vector<std::vector<Letter>> sup;
      while (changed && budget > 0) {
        changed = false;
        sup.assign(flowed.samples.size(), {});
        for (size_t i = 0; i < flowed.samples.size(); ++i)
          sup[i] = support(flowed.samples[i]);
        std::vector<LeafSample> next;
        next.reserve(flowed.samples.size() * 2);
        for (size_t i = 0; i < flowed.samples.size(); ++i) {
          next.push_back(flowed.samples[i]);
          if (i + 1 >= flowed.samples.size() || budget <= 0) continue;
          const auto& a = flowed.samples[i];
          const auto& b = flowed.samples[i + 1];
          const double ds = std::abs(b.s - a.s);
          if (ds <= 1e-13 * (1.0 + std::abs(a.s))) continue;
          if (sup[i] == sup[i + 1]) continue;
          // smooth cell boundaries stop at a fraction of the refinement
          // scale; pairs that stay far apart in phase space as ds -> 0
          // bracket a stretched filament and are bisected to the floor
          if (a.alive && b.alive && a.p.dist(b.p) <= 0.3 * spec.refine_gap)
            continue;
          next.push_back(flowed_replay(0.5 * (a.s + b.s)));
          --budget;
          changed = true;
        }
        flowed.samples.swap(next);
      }
    }

    std::map<Letter, Leaf> parts;
    for (const auto& ls : flowed.samples) {
      if (!ls.alive) continue;
      for (const auto& lw : cover.weights(ls.p)) {
        if (lw.letter.kind == CoverKind::Zero) continue;
        if (lw.w <= 1e-14) continue;
        LeafSample c = ls;
        c.m *= lw.w * lw.w;
        parts[lw.letter].samples.push_back(c);
      }
    }
    if (try_cap(static_cast<long>(parts.size()))) return fam;
    for (auto& [letter, part] : parts) {
      Branch child;
      child.word = br.word;
      child.word.letters.push_back(letter);
      child.leaf = std::move(part);
      child.station = br.station;
      child.first_deep_a2 = br.first_deep_a2;
      if (child.first_deep_a2 < 0 && letter.kind == CoverKind::A2 && n >= spec.n_pre)
        child.first_deep_a2 = n;
      relabel_components(child.leaf, spec.d_merge);
      const double ab = amp_bound(child);
      child.J = ab;
      if (ab < spec.prune_tol) {
        if (dbg && ab > 1e-10)
          std::fprintf(stderr, "prune-amp %.2e %s\n", ab,
                       child.word.str().c_str());
        continue;
      }
      if (fully_outgoing(model, child)) {
        if (dbg && ab > 1e-3)
          std::fprintf(stderr, "prune-out %.2e n=%d %s\n", ab,
                       (int)child.word.letters.size(),
                       child.word.str().c_str());
        continue;
      }
      ++fam.words_enumerated;
      frontier.push_back(std::move(child));
    }
  }
  return fam;
}

AssembledField assemble_dpw_wkb(const BranchFamily& family, const Cover& cover,
                                int chart, double h, const LocalGrid& grid) {
  if (!(h > 0.0)) throw Error(ErrorCode::invalid_input, "h must be positive");
  AssembledField out;
  out.grid = grid;
  out.values.assign(static_cast<size_t>(grid.n1) * grid.n2, Cplx{0.0, 0.0});

  auto add_record = [&](const LagrangianGraph& g, const std::vector<double>& y1s,
                        double y1_lo, double y1_hi, bool slab) {
    double sup = 0.0;
    for (int i1 = 0; i1 < grid.n1; ++i1) {
      const double y1 = grid.y1_lo + (grid.y1_hi - grid.y1_lo) * (i1 + 0.5) / grid.n1;
      if (slab && (y1 < y1_lo || y1 >= y1_hi)) continue;
      for (int i2 = 0; i2 < grid.n2; ++i2) {
        const double y2 =
            grid.y2_lo + (grid.y2_hi - grid.y2_lo) * (i2 + 0.5) / grid.n2;
        // locate bracketing samples within a component
        for (size_t k = 0; k + 1 < g.y.size(); ++k) {
          if (g.comp[k] != g.comp[k + 1]) continue;
          const double a = g.y[k], b = g.y[k + 1];
          if ((y2 - a) * (y2 - b) > 0.0 || a == b) continue;
          const double t = (y2 - a) / (b - a);
          // Hermite phase (gradient = F), linear amplitude
          const double dy = b - a;
          const double phi =
              (2 * t * t * t - 3 * t * t + 1) * g.phi[k] +
              (t * t * t - 2 * t * t + t) * dy * g.F[k] +
              (-2 * t * t * t + 3 * t * t) * g.phi[k + 1] +
              (t * t * t - t * t) * dy * g.F[k + 1];
          const double Fq = g.F[k] + t * (g.F[k + 1] - g.F[k]);
          const double e1 = g.eta1[k] + t * (g.eta1[k + 1] - g.eta1[k]);
          const Cplx amp = g.amp[k] + t * (g.amp[k + 1] - g.amp[k]);
          Vec4 z;
          z << y1, y2, e1, Fq;
          const double full_phase = phi + g.chart->gauge(z);
          const Cplx term = amp * std::polar(1.0, full_phase / h);
          out.values[static_cast<size_t>(i1) * grid.n2 + i2] += term;
          sup = std::max(sup, std::abs(term));
          break;
        }
      }
    }
    return sup;
  };

  if (family.free_case) {
    // single flat term: the incoming plane wave on the chart window
    if (cover.a1_sets().empty()) {
      // global frame: y == x, phase = x.xi
      for (int i1 = 0; i1 < grid.n1; ++i1)
        for (int i2 = 0; i2 < grid.n2; ++i2) {
          const double x1 =
              grid.y1_lo + (grid.y1_hi - grid.y1_lo) * (i1 + 0.5) / grid.n1;
          const double x2 =
              grid.y2_lo + (grid.y2_hi - grid.y2_lo) * (i2 + 0.5) / grid.n2;
          const double ph = (x1 * family.xi(0) + x2 * family.xi(1)) / h;
          out.values[static_cast<size_t>(i1) * grid.n2 + i2] = std::polar(1.0, ph);
        }
      out.contributions.emplace_back("flat", 1.0);
      return out;
    }
  }

  for (const auto& rec : family.records) {
    if (rec.chart != chart) continue;
    const double sup = add_record(rec.graph, rec.y1, rec.y1_lo, rec.y1_hi, true);
    if (sup > 0.0) out.contributions.emplace_back(rec.word, sup);
  }
  return out;
}

DecayReport branch_norm_report(const BranchFamily& family, double pressure_half,
                               double eps_margin) {
  DecayReport rep;
  const auto& sums = family.depth_sup_sum;
  int n_lo = 0, n_hi = static_cast<int>(sums.size()) - 1;
  while (n_hi > 0 && sums[n_hi] <= 0.0) --n_hi;
  // fit the geometric tail: from the global maximum onward
  int n_peak = 0;
  for (int n = 0; n <= n_hi; ++n)
    if (sums[n] > sums[n_peak]) n_peak = n;
  n_lo = n_peak;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int n = n_lo; n <= n_hi; ++n) {
    if (sums[n] <= 0.0) continue;
    const double x = n, y = std::log(sums[n]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  const double slope =
      cnt >= 2 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : 0.0;
  rep.fitted_rate = std::exp(slope);
  rep.fit_first_n = n_lo;
  const double bound_rate = std::exp(family.t0 * (pressure_half + eps_margin));
  rep.pressure_bound_ok = cnt >= 2 && rep.fitted_rate <= bound_rate;
  const double c0 = sums[n_peak] > 0 ? sums[n_peak] : 1.0;
  for (int n = 0; n <= n_hi; ++n) {
    DecayRow row;
    row.n = n;
    row.sum_sup = sums[n];
    row.bound = c0 * std::pow(bound_rate, n - n_peak);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace dpw
