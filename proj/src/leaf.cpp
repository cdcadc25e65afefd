#include "dpwlab/leaf.hpp"

#include <algorithm>
#include <cmath>

namespace dpw {

int Leaf::n_alive() const {
  int n = 0;
  for (const auto& s : samples) n += s.alive ? 1 : 0;
  return n;
}

int Leaf::n_components() const {
  int n = 0;
  int last = -1;
  for (const auto& s : samples)
    if (s.alive && s.comp != last) {
      ++n;
      last = s.comp;
    }
  return n;
}

LeafSample IncomingSeed::sample(double s) const {
  LeafSample ls;
  ls.s = s;
  ls.p.x = tau * xi + s * perp();
  ls.p.xi = xi;
  const Vec2 pp = perp();
  ls.T << pp(0), pp(1), 0.0, 0.0;
  ls.phi = ls.p.x.dot(xi);
  ls.m = 2.0;
  ls.p0 = xi.squaredNorm();
  ls.tsign = ls.proj_det() >= 0.0 ? 1.0 : -1.0;
  return ls;
}

Leaf make_incoming_leaf(const IncomingSeed& seed, double s0, double s1, int n) {
  Leaf lf;
  lf.samples.reserve(n + 1);
  for (int i = 0; i <= n; ++i)
    lf.samples.push_back(seed.sample(s0 + (s1 - s0) * i / n));
  return lf;
}

namespace {

inline void fold_check(LeafSample& ls) {
  const double d = ls.proj_det();
  const double sg = d >= 0.0 ? 1.0 : -1.0;
  if (ls.tsign != 0.0 && sg != ls.tsign) ls.folds += 1;
  ls.tsign = sg;
}

// one leapfrog step of duration dt, with action increment (exact along the
// discrete path) and tangent pushed by the same shears
inline void sample_step(const PotentialModel& m, LeafSample& ls, double dt) {
  ls.p.x += dt * ls.p.xi;
  ls.phi += dt * ls.p.xi.squaredNorm();
  ls.T.head<2>() += dt * ls.T.tail<2>();
  double V;
  Vec2 g;
  Mat2 H;
  evaluate_potential_full(m, ls.p.x, V, g, H);
  ls.p.xi -= dt * g;
  ls.T.tail<2>() -= dt * (H * ls.T.head<2>());
  ls.p.x += dt * ls.p.xi;
  ls.T.head<2>() += dt * ls.T.tail<2>();
  ls.phi += dt * ls.p.xi.squaredNorm();
  ls.phi -= dt * (ls.p0 - 1.0);
  fold_check(ls);
}

inline bool segment_free(const PotentialModel& m, const LeafSample& ls, double t) {
  return ls.p.x.norm() - 2.0 * std::abs(t) * ls.p.xi.norm() > m.cutoff_radius;
}

}  // namespace

void sample_flow(const PotentialModel& m, LeafSample& ls, double t, double dt) {
  if (t == 0.0) return;
  if (segment_free(m, ls, t)) {
    // free flight: exact translation; the projection det is linear in time,
    // an interior sign change is a fold
    const double d0 = ls.proj_det();
    ls.p.x += 2.0 * t * ls.p.xi;
    ls.T.head<2>() += 2.0 * t * ls.T.tail<2>();
    ls.phi += t * (2.0 * ls.p.xi.squaredNorm() - (ls.p0 - 1.0));
    const double d1 = ls.proj_det();
    if (d0 * d1 < 0.0) ls.folds += 1;
    ls.tsign = d1 >= 0.0 ? 1.0 : -1.0;
    return;
  }
  const long n = std::max<long>(1, std::lround(std::ceil(std::abs(t) / dt)));
  const double h = t / static_cast<double>(n);
  for (long k = 0; k < n; ++k) sample_step(m, ls, h);
}

void leaf_flow(const PotentialModel& m, Leaf& leaf, double t, double dt) {
  for (auto& ls : leaf.samples)
    if (ls.alive) sample_flow(m, ls, t, dt);
}

void relabel_components(Leaf& leaf, double d_merge) {
  int comp = -1;
  const LeafSample* prev = nullptr;
  for (auto& s : leaf.samples) {
    if (!s.alive) {
      prev = nullptr;
      continue;
    }
    if (prev == nullptr || s.p.dist(prev->p) > d_merge) ++comp;
    s.comp = comp;
    prev = &s;
  }
}

int refine_leaf(Leaf& leaf, double gap, int max_insert,
                const std::function<LeafSample(double)>& replay,
                double edge_floor) {
  if (edge_floor <= 0.0) edge_floor = 0.05 * gap;
  int inserted = 0;
  bool changed = true;
  while (changed && inserted < max_insert) {
    changed = false;
    std::vector<LeafSample> next;
    next.reserve(leaf.samples.size() * 2);
    for (size_t i = 0; i < leaf.samples.size(); ++i) {
      next.push_back(leaf.samples[i]);
      if (i + 1 >= leaf.samples.size()) continue;
      const auto& a = leaf.samples[i];
      const auto& b = leaf.samples[i + 1];
      if (!(a.alive || b.alive)) continue;
      bool split;
      if (a.alive && b.alive)
        split = a.p.dist(b.p) > gap;
      else
        // alive/dead boundary: resolve the edge down to edge_floor in s
        split = std::abs(b.s - a.s) > edge_floor;
      if (!split || inserted >= max_insert) continue;
      next.push_back(replay(0.5 * (a.s + b.s)));
      ++inserted;
      changed = true;
    }
    leaf.samples.swap(next);
  }
  return inserted;
}

double LagrangianGraph::sup_amp() const {
  double s = 0.0;
  for (const auto& a : amp) s = std::max(s, std::abs(a));
  return s;
}

LagrangianGraph leaf_graph(const PotentialModel& model, const Leaf& leaf,
                           const AdaptedChart& chart, bool require_graph) {
  LagrangianGraph g;
  g.chart = &chart;
  for (const auto& ls : leaf.samples) {
    if (!ls.alive) continue;
    const Vec4 z = chart.to_chart(ls.p);
    const Vec4 tz = chart.inv * ls.T;
    const Vec4 vz = chart.inv * hamilton_field(model, ls.p);
    const double det = vz(0) * tz(1) - vz(1) * tz(0);
    Cplx amp = 0.0;
    if (std::abs(det) > 1e-300)
      amp = std::polar(std::sqrt(ls.m / std::abs(det)), -0.5 * M_PI * ls.folds);
    g.y.push_back(z(1));
    g.eta1.push_back(z(2));
    g.F.push_back(z(3));
    g.phi.push_back(ls.phi - chart.gauge(z));
    g.amp.push_back(amp);
    g.comp.push_back(ls.comp);
    g.s.push_back(ls.s);
    g.energy_residual = std::max(g.energy_residual, std::abs(z(2)));
  }
  for (size_t i = 0; i + 1 < g.y.size(); ++i) {
    if (g.comp[i] != g.comp[i + 1]) continue;
    const double dy = g.y[i + 1] - g.y[i];
    if (std::abs(dy) < 1e-14) {
      g.fold_free = false;
      continue;
    }
    g.gamma = std::max(g.gamma, std::abs((g.F[i + 1] - g.F[i]) / dy));
  }
  for (size_t i = 0; i + 2 < g.y.size(); ++i) {
    if (g.comp[i] != g.comp[i + 1] || g.comp[i + 1] != g.comp[i + 2]) continue;
    if ((g.y[i + 1] - g.y[i]) * (g.y[i + 2] - g.y[i + 1]) < 0.0) g.fold_free = false;
  }
  if (require_graph && !g.fold_free)
    throw Error(ErrorCode::cone_violation, "fold inside chart: not a graph over y2");
  return g;
}

std::optional<double> graph_value(const LagrangianGraph& g, int comp, double yq) {
  for (size_t i = 0; i + 1 < g.y.size(); ++i) {
    if (g.comp[i] != comp || g.comp[i + 1] != comp) continue;
    const double y0 = g.y[i], y1 = g.y[i + 1];
    if ((yq - y0) * (yq - y1) <= 0.0 && y0 != y1) {
      const double t = (yq - y0) / (y1 - y0);
      return g.F[i] + t * (g.F[i + 1] - g.F[i]);
    }
  }
  return std::nullopt;
}

}  // namespace dpw
