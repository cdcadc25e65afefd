#include <doctest.h>

#include "dpwlab/measure.hpp"
#include "support/oracles.hpp"

using namespace dpw;
using namespace dpw::testing;

TEST_CASE("pushforward: free flow, symbol off the momentum shell gives zero") {
  PotentialModel m;
  m.cutoff_radius = 0.5;
  m.validate();
  PhaseSymbol a;
  a.x0 = Vec2{0.0, 0.0};
  a.xi0 = Vec2{0.0, 1.0};  // orthogonal to xi
  a.rx = 0.4;
  a.rxi = 0.4;
  PushforwardSpec spec;
  spec.dx = 0.05;
  spec.t_max = 3.0;
  auto s = pushforward_series(m, Vec2{1.0, 0.0}, a, spec);
  for (double v : s.values) CHECK(v == 0.0);
}

TEST_CASE("pushforward: free flow saturates to the flat quadrature") {
  PotentialModel m;
  m.cutoff_radius = 0.5;
  m.validate();
  PhaseSymbol a;
  a.x0 = Vec2{0.3, -0.2};
  a.xi0 = Vec2{1.0, 0.0};
  a.rx = 0.5;
  a.rxi = 0.5;
  PushforwardSpec spec;
  spec.dx = 0.02;
  spec.t_max = 6.0;
  spec.dt_series = 1.0;
  auto s = pushforward_series(m, Vec2{1.0, 0.0}, a, spec);
  REQUIRE(s.values.size() >= 6);
  // once the incoming front has swept past supp a, the value is constant
  // (translation invariance of dx) and equals the direct quadrature
  const size_t k0 = 3;
  for (size_t k = k0 + 1; k < s.values.size(); ++k)
    CHECK(s.values[k] == doctest::Approx(s.values[k0]).epsilon(1e-6));
  double direct = 0.0;
  const double R = 1.5, dq = 0.02;
  const int n = static_cast<int>(2 * R / dq);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      direct += a.eval(Vec2{-R + (i + 0.5) * dq, -R + (j + 0.5) * dq},
                       Vec2{1.0, 0.0}) *
                dq * dq;
  CHECK(s.values.back() == doctest::Approx(direct).epsilon(1e-4));
}

TEST_CASE("pushforward: three-bump series is non-decreasing for a >= 0") {
  auto m = three_bump_model();
  PhaseSymbol a;
  a.x0 = Vec2{0.0, 0.0};
  a.xi0 = Vec2{1.0, 0.0};
  a.rx = 0.8;
  a.rxi = 1.4;  // covers most of the momentum circle
  PushforwardSpec spec;
  spec.dx = 0.04;
  spec.t_max = 6.0;
  spec.dt_series = 0.5;
  spec.dt_flow = 2e-3;
  auto s = pushforward_series(m, Vec2{std::cos(0.3), std::sin(0.3)}, a, spec);
  // non-decreasing within the reported quadrature noise
  CHECK(s.noise < 0.05 * s.values.back());
  for (size_t k = 1; k < s.values.size(); ++k)
    CHECK(s.values[k] >= s.values[k - 1] - s.noise - 1e-12);
}

namespace {

// hand-built single-record family on a synthetic chart
BranchFamily toy_family(const AdaptedChart& ch, const Cplx& amp1,
                        const Cplx& amp2, double offset) {
  BranchFamily fam;
  fam.t0 = 1.0;
  fam.depth_sup_sum = {0.0, std::abs(amp1)};
  auto mk = [&](const Cplx& amp, double off, const std::string& w, int n) {
    ChartRecord rec;
    rec.chart = 0;
    rec.n = n;
    rec.word = w;
    rec.sup_a = std::abs(amp);
    rec.y1_lo = -0.5;
    rec.y1_hi = 0.5;
    rec.graph.chart = &ch;
    for (int i = 0; i <= 32; ++i) {
      const double y = -0.5 + i / 32.0;
      rec.graph.y.push_back(y);
      rec.graph.F.push_back(off);
      rec.graph.eta1.push_back(0.0);
      rec.graph.phi.push_back(off * y);
      rec.graph.amp.push_back(amp);
      rec.graph.comp.push_back(0);
      rec.graph.s.push_back(y);
      rec.y1.push_back(0.0);
    }
    return rec;
  };
  fam.records.push_back(mk(amp1, 0.0, "a0", 1));
  fam.records.push_back(mk(amp2, offset, "a0.a0", 1));
  return fam;
}

}  // namespace

TEST_CASE("leaf densities: merge and cancellation") {
  auto m = two_bump_model();
  auto orb = two_bump_orbit(m);
  SplittingSpec ss;
  ss.T_win = 5.0 * orb.period;
  ss.dt = 1e-3;
  auto fr = splitting(m, orb.start, ss);
  ChartSpec cs;
  auto ch = build_adapted_chart(m, fr, cs);
  TrappedSamplingSpec ts;
  ts.dx = 0.08;
  ts.ndir = 16;
  ts.T_max = 2.5;
  auto tr = sample_trapped_set(m, ts);
  CoverSpec cvs;
  cvs.eps_sec = 0.35;
  cvs.splitting = ss;
  Cover cover(m, tr, cvs);

  AtlasSpec as;
  as.merge_tol = 1e-6;

  // single branch: e = |a|^2
  {
    auto fam = toy_family(ch, Cplx{0.7, 0.0}, Cplx{0.0, 0.0}, 0.5);
    fam.records.pop_back();
    auto atlas = leaf_densities(fam, cover, 0.01, as);
    REQUIRE(atlas.leaves.size() == 1);
    for (double e : atlas.leaves[0].e)
      CHECK(e == doctest::Approx(0.49).epsilon(1e-9));
  }
  // identical leaves with amplitudes a and -a cancel
  {
    auto fam = toy_family(ch, Cplx{0.7, 0.0}, Cplx{-0.7, 0.0}, 0.0);
    auto atlas = leaf_densities(fam, cover, 0.01, as);
    REQUIRE(atlas.leaves.size() == 1);
    CHECK(atlas.leaves[0].merged == 2);
    for (double e : atlas.leaves[0].e) CHECK(e < 1e-12);
  }
  // separated leaves stay distinct
  {
    auto fam = toy_family(ch, Cplx{0.7, 0.0}, Cplx{0.5, 0.0}, 0.2);
    auto atlas = leaf_densities(fam, cover, 0.01, as);
    CHECK(atlas.leaves.size() == 2);
    CHECK(atlas.flagged.empty());
  }
  // ambiguous band is flagged
  {
    auto fam = toy_family(ch, Cplx{0.7, 0.0}, Cplx{0.5, 0.0}, 5e-6);
    auto atlas = leaf_densities(fam, cover, 0.01, as);
    CHECK(!atlas.flagged.empty());
  }
}

TEST_CASE("husimi pairing of a masked plane wave matches the flat measure") {
  // mu_0 pairing: int psi(x, xi) dx over the plateau
  PotentialModel m;
  m.cutoff_radius = 0.12;
  m.validate();
  const double L = 1.5, h = 1.0 / 128;
  const int n = 256;
  WaveField f = make_field(n, L, h);
  const Vec2 xi{1.0, 0.0};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 x{f.x1(i), f.x2(j)};
      f.at(i, j) = std::polar(1.0, x.dot(xi) / h);
    }
  PhaseSymbol sym;
  sym.x0 = Vec2{0.1, -0.05};
  sym.xi0 = xi;
  sym.rx = 0.15;
  sym.rxi = 0.3;
  const double pair = husimi_pairing(f, sym, 1.0);
  // direct flat-measure quadrature
  double direct = 0.0;
  const double dq = 0.01;
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < 60; ++j) {
      const Vec2 x = sym.x0 + Vec2{-0.3 + (i + 0.5) * dq, -0.3 + (j + 0.5) * dq};
      direct += sym.eval(x, xi) * dq * dq;
    }
  CHECK(pair == doctest::Approx(direct).epsilon(0.05));
}
