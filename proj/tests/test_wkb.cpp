#include <doctest.h>

#include "dpwlab/wkb.hpp"
#include "support/oracles.hpp"

using namespace dpw;
using namespace dpw::testing;

namespace {

Cover make_cover(const PotentialModel& m, double eps_sec) {
  TrappedSamplingSpec ts;
  ts.dx = 0.08;
  ts.ndir = 16;
  ts.T_max = 2.5;
  auto tr = sample_trapped_set(m, ts);
  CoverSpec cs;
  cs.eps_sec = eps_sec;
  cs.splitting.T_win = 10.0;
  cs.splitting.dt = 1e-3;
  return Cover(m, tr, cs);
}

}  // namespace

TEST_CASE("enumerate: no trapping gives the flat depth-0 family") {
  PotentialModel m;
  m.cutoff_radius = 1.0;
  m.validate();
  TrappedSamplingSpec ts;
  ts.dx = 0.3;
  ts.ndir = 8;
  ts.T_max = 2.0;
  auto tr = sample_trapped_set(m, ts);
  CoverSpec cs;
  Cover cover(m, tr, cs);
  BranchSpec bs;
  bs.t0 = 1.0;
  auto fam = enumerate_branches(m, cover, Vec2{1.0, 0.0}, bs);
  CHECK(fam.free_case);
  CHECK(fam.records.empty());

  // assembly of the free family is the plane wave itself
  LocalGrid lg;
  lg.y1_lo = -0.3;
  lg.y1_hi = 0.3;
  lg.y2_lo = -0.2;
  lg.y2_hi = 0.2;
  lg.n1 = 8;
  lg.n2 = 16;
  const double h = 1.0 / 64;
  auto field = assemble_dpw_wkb(fam, cover, -1, h, lg);
  for (int i = 0; i < lg.n1; ++i)
    for (int j = 0; j < lg.n2; ++j) {
      const double x1 = lg.y1_lo + (lg.y1_hi - lg.y1_lo) * (i + 0.5) / lg.n1;
      const double x2 = lg.y2_lo + (lg.y2_hi - lg.y2_lo) * (j + 0.5) / lg.n2;
      const Cplx expect = std::polar(1.0, x1 / h);
      CHECK(std::abs(field.values[i * lg.n2 + j] - expect) < 1e-6);
      (void)x2;
    }
}

TEST_CASE("free leaf transport keeps the plane-wave phase and amplitude") {
  PotentialModel m;
  m.cutoff_radius = 0.5;
  m.validate();
  IncomingSeed seed{Vec2{0.0, 1.0}, -4.0};
  Leaf lf = make_incoming_leaf(seed, -1.0, 1.0, 32);
  leaf_flow(m, lf, 2.3, 1e-3);
  for (const auto& s : lf.samples) {
    CHECK(s.phi == doctest::Approx(s.p.x.dot(Vec2{0.0, 1.0})).epsilon(1e-12));
    CHECK(s.m == doctest::Approx(2.0));
    CHECK(s.folds == 0);
  }
}

TEST_CASE("two-bump branch family: records, decay, pressure envelope shape") {
  auto m = two_bump_model();
  auto cover = make_cover(m, 0.35);
  REQUIRE(!cover.a1_sets().empty());
  BranchSpec bs;
  bs.t0 = 1.0;
  bs.dt = 1e-3;
  bs.n_max = 16;
  bs.prune_tol = 1e-8;
  bs.branch_cap = 400000;
  bs.seed_samples = 200;
  // incidence tilted off the symmetry axis: axis-parallel rays are shielded
  // by the near bump and barely couple to the trapped orbit
  const double th = 20.0 * M_PI / 180.0;
  auto fam = enumerate_branches(m, cover, Vec2{std::cos(th), std::sin(th)}, bs);
  CHECK(!fam.budget_exceeded);
  REQUIRE(!fam.records.empty());
  // depth sums decay roughly geometrically at rate exp(-lambda t0 / 2)
  auto orb = two_bump_orbit(m);
  DecayReport rep = branch_norm_report(fam, -0.5 * orb.lambda, 0.1);
  CHECK(rep.fitted_rate > 0.0);
  CHECK(rep.fitted_rate < 1.0);
  const double expect = std::exp(-0.5 * orb.lambda * bs.t0);
  CHECK(std::log(rep.fitted_rate) ==
        doctest::Approx(std::log(expect)).epsilon(0.35));
  // every record's graph satisfies the phase-leaf consistency: dphi/dy = F
  int checked = 0;
  for (const auto& rec : fam.records) {
    const auto& g = rec.graph;
    for (size_t k = 0; k + 1 < g.y.size(); ++k) {
      if (g.comp[k] != g.comp[k + 1]) continue;
      const double dy = g.y[k + 1] - g.y[k];
      if (std::abs(dy) < 1e-6) continue;
      const double fd = (g.phi[k + 1] - g.phi[k]) / dy;
      const double Fm = 0.5 * (g.F[k] + g.F[k + 1]);
      CHECK(fd == doctest::Approx(Fm).epsilon(0.02).scale(0.05));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("branch norm report: single-row family") {
  BranchFamily fam;
  fam.t0 = 1.0;
  fam.depth_sup_sum = {1.0};
  auto rep = branch_norm_report(fam, -0.5, 0.1);
  CHECK(rep.rows.size() == 1);
  CHECK(rep.rows[0].sum_sup == 1.0);
}
