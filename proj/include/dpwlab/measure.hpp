#pragma once

#include "dpwlab/qsolver.hpp"
#include "dpwlab/wkb.hpp"

namespace dpw {

struct PushforwardSpec {
  double domain_halfwidth = 0.0;  // 0 -> auto-expand
  double dx = 0.05;
  double t_max = 10.0;
  double dt_series = 0.5;
  double dt_flow = 2e-3;
  double boundary_tol = 1e-10;
  double max_halfwidth = 64.0;
};

struct PushforwardSeries {
  std::vector<double> times;
  std::vector<double> values;
  double domain_halfwidth = 0.0;
  // quadrature noise floor: sup_t |value_dx - value_2dx|, the tolerance at
  // which monotonicity statements are decidable
  double noise = 0.0;
};

// Quadrature of a(Phi^t(x, xi)) dx over the incoming plane-of-initial-data,
// i.e. the pushforward of mu_0 = dx delta_{v=xi}. The domain expands until
// the boundary ring stops contributing.
PushforwardSeries pushforward_series(const PotentialModel& m, const Vec2& xi,
                                     const PhaseSymbol& a,
                                     const PushforwardSpec& spec);

// direct quadrature of the symbol against mu_0 on the same lattice the
// series uses (the oracle for the free-flow saturation identity)
double pushforward_direct(const PotentialModel& m, const Vec2& xi,
                          const PhaseSymbol& a, double R, double dx_req);

struct AtlasLeaf {
  int chart = -1;
  int n = 0;
  std::string word;           // representative word of the merged group
  int merged = 1;             // number of branch terms sharing the leaf
  double y1_lo = 0.0, y1_hi = 0.0;
  std::vector<double> y;      // base points
  std::vector<double> F;      // leaf values
  std::vector<double> e;      // nonnegative density |sum a|^2
  std::vector<Cplx> amp_sum;  // summed amplitude (with relative phases at h)
};

struct FlaggedPair {
  std::string word_a, word_b;
  int chart = 0;
  double separation = 0.0;  // between merge_tol and the separation bound
};

struct MeasureAtlas {
  std::vector<AtlasLeaf> leaves;
  std::vector<FlaggedPair> flagged;
  double tail_bound = 0.0;
  double h = 0.0;
};

struct AtlasSpec {
  double merge_tol = 1e-6;
  double ambiguous_band = 10.0;  // flagged if sep < band * merge_tol
};

// Group branch records whose leaves coincide (equal leaf values on the
// overlap), sum amplitudes with their relative phases, set e = |sum|^2.
MeasureAtlas leaf_densities(const BranchFamily& family, const Cover& cover,
                            double h, const AtlasSpec& spec);

// sum over leaves of int psi(x, dphi) e dy (slab-resolved in y1)
double atlas_pairing(const MeasureAtlas& atlas, const Cover& cover,
                     const PhaseSymbol& sym);

struct ComparisonRow {
  std::string symbol;
  double atlas = 0.0;
  double husimi = 0.0;
  double gap = 0.0;
};

std::vector<ComparisonRow> compare_quantum_classical(
    const MeasureAtlas& atlas, const Cover& cover, const WaveField& field,
    const std::vector<std::pair<std::string, PhaseSymbol>>& symbols,
    double husimi_width);

}  // namespace dpw
