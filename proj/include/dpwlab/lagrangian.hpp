#pragma once

#include "dpwlab/leaf.hpp"

namespace dpw {

struct PropagateSpec {
  double t_step = 1.0;
  double dt = 1e-3;
  double d_merge = 0.0;     // 0 -> eps_sec/2
  double refine_gap = 0.0;  // 0 -> eps_sec/4
  int max_leaf_samples = 4000;
};

struct TruncatedResult {
  Leaf leaf;                           // after the last restriction
  std::vector<LagrangianGraph> graphs; // one per component (final letter in A1)
};

// Word-truncated propagation: restrict to the first letter, then alternate
// flow by t_step and restriction to the next letter (set membership is
// "partition weight > 0"). Components are re-graphed in the final letter's
// chart when it is an A1 set.
TruncatedResult propagate_truncated(const PotentialModel& m, const Cover& cover,
                                    const Leaf& start, const SymbolicWord& word,
                                    const PropagateSpec& spec);

struct InclinationTrace {
  std::vector<double> gamma;  // slope per step, gamma[0] = start slope
  double nu1 = 0.0;           // fitted contraction with gamma_{k+1} <= nu1 gamma_k + c
  double c_infl = 0.0;
  bool bound_holds = false;
  int n1_steps = 0;  // floor(log(gamma_uns/(4 gamma0)) / log((1+nu1)/2)) + 1
};

struct InclinationSpec {
  double gamma0 = 0.5;
  double gamma_uns = 0.1;
  int steps = 12;
  double t0 = 1.0;
  double dt = 1e-3;
  double leaf_halfwidth = 0.02;
  int leaf_samples = 64;
  SplittingSpec splitting;
  ChartSpec chart;
};

// Slope sequence of a small graph leaf propagated along the orbit of rho0,
// re-graphed in adapted charts at the orbit points.
InclinationTrace inclination_trace(const PotentialModel& m,
                                   const PhasePoint& rho0,
                                   const InclinationSpec& spec);

enum class PairVerdict { equal, separated, ambiguous, disjoint };

struct SeparationEntry {
  int i = 0, j = 0;
  double min_sep = 0.0;
  double max_sep = 0.0;
  double overlap = 0.0;  // common y2 length
  PairVerdict verdict = PairVerdict::disjoint;
};

// Pairwise min |F_i - F_j| over common base points; pairs below equal_tol
// everywhere are "equal", pairs above merge_tol everywhere "separated".
std::vector<SeparationEntry> leaf_separation(
    const std::vector<LagrangianGraph>& leaves, double equal_tol,
    double merge_tol);

// Smallest principal angle between span{leaf tangent, H_p} and the stable
// direction, minimized over graph samples near the chart center.
double transversality_angle(const PotentialModel& m, const LagrangianGraph& g,
                            const SplittingFrame& frame);

}  // namespace dpw
