#pragma once

#include <map>

#include "dpwlab/leaf.hpp"

namespace dpw {

// One WKB term: the leaf snapshot of a word at an A1 chart, with in-chart
// phase, materialized amplitudes and the y1 slab this prefix represents.
struct ChartRecord {
  int chart = -1;  // A1 index
  int n = 0;       // word length
  std::string word;
  double sup_a = 0.0;
  double gamma = 0.0;
  double J = 0.0;
  double y1_lo = 0.0, y1_hi = 0.0;
  LagrangianGraph graph;
  std::vector<double> y1;  // y1 per graph sample
};

struct BranchSpec {
  int n_max = 60;
  double prune_tol = 1e-8;
  long branch_cap = 1000000;
  double t0 = 1.0;
  double dt = 1e-3;
  double refine_gap = 0.0;  // 0 -> eps_sec/4
  double d_merge = 0.0;     // 0 -> eps_sec/2
  int max_leaf_samples = 4000;
  int seed_samples = 160;
  double seed_halfwidth = 0.0;  // 0 -> 1.5 * cutoff radius
  int n_pre = 0;                // 0 -> auto from geometry
  int n_suf = 0;                // 0 -> n_pre
};

struct BranchFamily {
  std::vector<ChartRecord> records;
  std::vector<double> depth_sup_sum;  // sum of sup|a| over A1-ending words per n
  long words_enumerated = 0;
  long branches_peak = 0;
  bool budget_exceeded = false;
  bool free_case = false;  // no trapped branches: single flat term
  Vec2 xi{1.0, 0.0};
  double t0 = 1.0;
};

// Depth-first enumeration of cover words applied to the incoming plane-wave
// Lagrangian, with the per-letter partition weights as transported cutoffs.
// When the cover has no A1 sets (no trapping at the sampled resolution) the
// family degenerates to the single flat term.
BranchFamily enumerate_branches(const PotentialModel& m, const Cover& cover,
                                const Vec2& xi, const BranchSpec& spec);

struct LocalGrid {
  double y1_lo = -0.1, y1_hi = 0.1;
  double y2_lo = -0.1, y2_hi = 0.1;
  int n1 = 32, n2 = 64;
};

struct AssembledField {
  LocalGrid grid;
  std::vector<Cplx> values;  // row-major, n1 x n2
  std::vector<std::pair<std::string, double>> contributions;  // word, sup|term|
  double l2() const;
};

// Sum of branch terms a e^{i phi/h} at chart b on a local grid. The chart
// gauge is reattached so values follow the x-space phase convention (the
// V=0 family reproduces the plane wave itself). Phase is interpolated with
// the graph slope (Hermite), amplitude linearly.
AssembledField assemble_dpw_wkb(const BranchFamily& family, const Cover& cover,
                                int chart, double h, const LocalGrid& grid);

struct DecayRow {
  int n = 0;
  double sum_sup = 0.0;
  double bound = 0.0;  // C * exp(n * t0 * (P(1/2) + eps))
};

struct DecayReport {
  std::vector<DecayRow> rows;
  double fitted_rate = 0.0;  // per-depth geometric rate of the tail
  double fit_first_n = 0.0;
  bool pressure_bound_ok = false;
};

// Per-depth amplitude sums against the pressure envelope
// exp(n t0 (P(1/2)+eps)); the fit runs over the geometric tail.
DecayReport branch_norm_report(const BranchFamily& family, double pressure_half,
                               double eps_margin);

}  // namespace dpw
