#include <doctest.h>

#include "dpwlab/lagrangian.hpp"
#include "support/oracles.hpp"

using namespace dpw;
using namespace dpw::testing;

namespace {

AdaptedChart global_chart(const Vec2& xi) {
  // identity frame centered at (0, xi): y = x, eta = xi' - xi
  SplittingFrame fr;
  fr.at = PhasePoint{{0.0, 0.0}, xi};
  AdaptedChart ch;
  ch.center = fr.at;
  ch.frame = Mat4::Identity();
  ch.inv = Mat4::Identity();
  ch.radius = 1e6;
  // gauge for the identity frame: G = xi.y (the quadratic part cancels)
  ch.glin = Vec4{xi(0), xi(1), 0.0, 0.0};
  ch.gquad = Mat4::Zero();
  return ch;
}

Cover make_cover(const PotentialModel& m, double eps_sec, double T_max = 2.5) {
  TrappedSamplingSpec ts;
  ts.dx = 0.08;
  ts.ndir = 16;
  ts.T_max = T_max;
  auto tr = sample_trapped_set(m, ts);
  CoverSpec cs;
  cs.eps_sec = eps_sec;
  cs.splitting.T_win = 10.0;
  cs.splitting.dt = 1e-3;
  return Cover(m, tr, cs);
}

}  // namespace

TEST_CASE("incoming lagrangian: flat graph with zero slope") {
  PotentialModel m;
  m.cutoff_radius = 1.0;
  m.validate();
  const Vec2 xi{1.0, 0.0};
  IncomingSeed seed{xi, -3.0};
  Leaf lf = make_incoming_leaf(seed, -1.0, 1.0, 64);
  auto ch = global_chart(xi);
  auto g = leaf_graph(m, lf, ch, true);
  CHECK(g.gamma == 0.0);
  CHECK(g.energy_residual < 1e-12);
  for (double F : g.F) CHECK(F == 0.0);  // eta2 = xi2 - 0
  // amplitude |a| = 1 for the plane wave normalization
  for (const auto& a : g.amp) CHECK(std::abs(a) == doctest::Approx(1.0));
  // phi matches x.xi minus gauge (constant on the leaf)
  for (size_t k = 0; k < g.phi.size(); ++k)
    CHECK(g.phi[k] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("incoming lagrangian: invariance under the free outer flow") {
  PotentialModel m;
  m.cutoff_radius = 1.0;
  m.validate();
  const Vec2 xi{0.6, 0.8};
  IncomingSeed seed{xi, -5.0};
  Leaf lf = make_incoming_leaf(seed, -1.0, 1.0, 32);
  leaf_flow(m, lf, 1.7, 1e-3);
  for (const auto& s : lf.samples) {
    CHECK((s.p.xi - xi).norm() < 1e-12);       // momenta fixed
    CHECK(s.phi == doctest::Approx(s.p.x.dot(xi)).epsilon(1e-12));
  }
}

TEST_CASE("spherical incoming variant stays on its lagrangian, slope -> 0") {
  PotentialModel m;
  m.cutoff_radius = 1.0;
  m.validate();
  const double R = 6.0;
  // section of Lambda_sph = (x, -x/|x|) near theta = 0
  Leaf lf;
  const int n = 48;
  for (int i = 0; i <= n; ++i) {
    const double th = -0.05 + 0.1 * i / n;
    LeafSample ls;
    ls.s = th;
    ls.p.x = Vec2{R * std::cos(th), R * std::sin(th)};
    ls.p.xi = -Vec2{std::cos(th), std::sin(th)};
    ls.T << -R * std::sin(th), R * std::cos(th), std::sin(th), -std::cos(th);
    ls.m = 1.0;
    ls.p0 = 1.0;
    lf.samples.push_back(ls);
  }
  // free flow keeps points on Lambda_sph (x and xi anti-parallel)
  Leaf moved = lf;
  leaf_flow(m, moved, 0.8, 1e-3);
  for (const auto& s : moved.samples) {
    const Vec2 xhat = s.p.x.normalized();
    CHECK((s.p.xi + xhat).norm() < 1e-12);
  }
  // radial chart at the section center: E+ along the sphere tangent of the
  // leaf, E- its time reversal
  SplittingFrame fr;
  fr.at = PhasePoint{{R, 0.0}, {-1.0, 0.0}};
  fr.e_flow = hamilton_field(m, fr.at);
  fr.e_grad = energy_gradient(m, fr.at);
  fr.E_plus = Vec4{0.0, R, 0.0, -1.0}.normalized();
  fr.E_minus = Vec4{0.0, R, 0.0, 1.0}.normalized();
  ChartSpec cs;
  auto ch = build_adapted_chart(m, fr, cs);
  auto g = leaf_graph(m, lf, ch, true);
  CHECK(g.gamma < 5e-3);  // curvature-limited, vanishes with the window
}

TEST_CASE("propagate_truncated: empty first intersection gives empty result") {
  auto m = two_bump_model();
  auto cover = make_cover(m, 0.35);
  REQUIRE(!cover.a1_sets().empty());
  IncomingSeed seed{Vec2{1.0, 0.0}, -40.0};  // far upstream: no overlap
  Leaf lf = make_incoming_leaf(seed, -0.8, 0.8, 64);
  SymbolicWord w;
  w.letters.push_back(cover.a1_letter(0));
  PropagateSpec ps;
  ps.t_step = 1.0;
  auto res = propagate_truncated(m, cover, lf, w, ps);
  CHECK(res.leaf.n_alive() == 0);
  CHECK(res.graphs.empty());
}

TEST_CASE("propagate_truncated: free flow preserves the flat graph") {
  PotentialModel m;
  m.bumps = {{{0.0, 0.0}, 0.4, 0.16}};  // weak bump, nothing trapped
  m.cutoff_radius = 2.2;
  m.validate();
  TrappedSamplingSpec ts;
  ts.dx = 0.2;
  ts.ndir = 8;
  ts.T_max = 2.0;
  auto tr = sample_trapped_set(m, ts);
  CHECK(tr.points.empty());
  CoverSpec cs;
  cs.eps_sec = 0.4;
  Cover cover(m, tr, cs);
  // word of zero letters: the outer region is invariant for incoming data
  IncomingSeed seed{Vec2{1.0, 0.0}, -8.0};
  Leaf lf = make_incoming_leaf(seed, -0.5, 0.5, 64);
  SymbolicWord w;
  w.letters.assign(2, Letter{});  // zero letters
  PropagateSpec ps;
  ps.t_step = 1.0;
  ps.d_merge = 0.3;
  ps.refine_gap = 0.2;
  auto res = propagate_truncated(m, cover, lf, w, ps);
  CHECK(res.leaf.n_alive() > 0);
  for (const auto& s : res.leaf.samples) {
    if (!s.alive) continue;
    CHECK((s.p.xi - Vec2{1.0, 0.0}).norm() < 1e-12);
  }
}

TEST_CASE("inclination trace: two-bump cone contraction") {
  auto m = two_bump_model();
  auto orb = two_bump_orbit(m);
  InclinationSpec is;
  is.gamma0 = 0.5;
  is.gamma_uns = 0.1;
  is.steps = 10;
  is.t0 = 1.0;
  is.dt = 1e-3;
  is.splitting.T_win = 5.0 * orb.period;
  is.splitting.dt = 1e-3;
  is.leaf_halfwidth = 0.01;
  auto tr = inclination_trace(m, orb.start, is);
  REQUIRE(tr.gamma.size() == 11);
  CHECK(tr.nu1 < 1.0);
  CHECK(tr.bound_holds);
  // monotone decrease until below gamma_uns
  bool reached = false;
  for (size_t k = 0; k + 1 < tr.gamma.size() && !reached; ++k) {
    if (tr.gamma[k + 1] > tr.gamma[k] + 1e-9) break;
    if (tr.gamma[k + 1] <= is.gamma_uns) reached = true;
  }
  CHECK(reached);
  // within the predicted step count
  CHECK(tr.n1_steps >= 1);
  int hit = -1;
  for (size_t k = 0; k < tr.gamma.size(); ++k)
    if (tr.gamma[k] <= is.gamma_uns) {
      hit = static_cast<int>(k);
      break;
    }
  REQUIRE(hit >= 0);
  CHECK(hit <= tr.n1_steps);
}

TEST_CASE("inclination trace: flat start stays flat up to curvature") {
  auto m = two_bump_model();
  auto orb = two_bump_orbit(m);
  InclinationSpec is;
  is.gamma0 = 0.0;
  is.steps = 6;
  is.t0 = 1.0;
  is.dt = 1e-3;
  is.splitting.T_win = 5.0 * orb.period;
  is.splitting.dt = 1e-3;
  is.leaf_halfwidth = 0.01;
  auto tr = inclination_trace(m, orb.start, is);
  for (double g : tr.gamma) CHECK(g < 0.05);  // c_infl scale only
}

TEST_CASE("leaf separation: self-equality and parallel flat graphs") {
  PotentialModel m;
  m.cutoff_radius = 1.0;
  m.validate();
  auto ch = global_chart(Vec2{1.0, 0.0});
  auto mk = [&](double offset) {
    LagrangianGraph g;
    g.chart = &ch;
    for (int i = 0; i <= 32; ++i) {
      g.y.push_back(-1.0 + 2.0 * i / 32);
      g.F.push_back(offset);
      g.eta1.push_back(0.0);
      g.phi.push_back(0.0);
      g.amp.push_back(1.0);
      g.comp.push_back(0);
      g.s.push_back(g.y.back());
    }
    return g;
  };
  std::vector<LagrangianGraph> leaves{mk(0.0), mk(0.25)};
  auto rep = leaf_separation(leaves, 1e-12, 1e-3);
  REQUIRE(rep.size() == 3);  // (0,0), (0,1), (1,1)
  CHECK(rep[0].verdict == PairVerdict::equal);
  CHECK(rep[2].verdict == PairVerdict::equal);
  CHECK(rep[1].verdict == PairVerdict::separated);
  CHECK(rep[1].min_sep == doctest::Approx(0.25));
  CHECK(rep[1].max_sep == doctest::Approx(0.25));
}

TEST_CASE("finite multiplicity: component count stable under refinement") {
  auto m = two_bump_model();
  auto cover = make_cover(m, 0.35);
  REQUIRE(!cover.a1_sets().empty());
  // propagate the incoming wave a few steps and restrict to the first chart
  IncomingSeed seed{Vec2{1.0, 0.0}, -4.0};
  SymbolicWord w;
  w.letters.assign(4, Letter{});
  w.letters.push_back(cover.a1_letter(0));
  PropagateSpec ps;
  ps.t_step = 1.0;
  ps.d_merge = 0.25;
  ps.refine_gap = 0.12;
  Leaf lf1 = make_incoming_leaf(seed, -1.2, 1.2, 200);
  auto res1 = propagate_truncated(m, cover, lf1, w, ps);
  Leaf lf2 = make_incoming_leaf(seed, -1.2, 1.2, 400);
  auto res2 = propagate_truncated(m, cover, lf2, w, ps);
  CHECK(res1.graphs.size() == res2.graphs.size());
}
