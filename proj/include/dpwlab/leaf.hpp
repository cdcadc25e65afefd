#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "dpwlab/cover.hpp"

namespace dpw {

// One sample of a Lagrangian section curve. `s` is the seed parameter
// (impact coordinate on the incoming plane), `phi` the accumulated action
// with the energy rephasing, `m` the transported flux |a|^2 * d(area)/d(s,t)
// (invariant under the flow), `T` the pushed tangent d rho/d s, `folds` the
// count of x-projection caustics along the history.
struct LeafSample {
  double s = 0.0;
  PhasePoint p;
  Vec4 T = Vec4::Zero();
  double phi = 0.0;
  double m = 0.0;
  double p0 = 1.0;  // conserved energy, fixed at the seed
  int folds = 0;
  int comp = 0;
  double tsign = 0.0;  // sign of the x-projection jacobian at last substep
  bool alive = true;

  // x-projection jacobian det(xdot, dx/ds)
  double proj_det() const {
    return 2.0 * (p.xi(0) * T(1) - p.xi(1) * T(0));
  }
};

struct Leaf {
  std::vector<LeafSample> samples;  // sorted by s
  int n_alive() const;
  int n_components() const;
};

// Incoming plane-wave Lagrangian {(x, xi)}: a section transverse to xi at
// longitudinal offset `tau` (x = tau*xi + s*xi_perp), phi = x.xi, m = 2.
struct IncomingSeed {
  Vec2 xi{1.0, 0.0};
  double tau = 0.0;
  Vec2 perp() const { return Vec2{-xi(1), xi(0)}; }
  LeafSample sample(double s) const;
};

Leaf make_incoming_leaf(const IncomingSeed& seed, double s0, double s1, int n);

// Advance one sample by t (leapfrog substeps of size dt; exact translation
// while the segment stays outside the potential support). Updates phi, the
// tangent and the fold count.
void sample_flow(const PotentialModel& m, LeafSample& ls, double t, double dt);

// Advance every alive sample.
void leaf_flow(const PotentialModel& m, Leaf& leaf, double t, double dt);

// Relabel components: contiguous alive runs, split where the phase-space gap
// between neighbors exceeds d_merge.
void relabel_components(Leaf& leaf, double d_merge);

// Insert midpoint samples where alive neighbors are farther apart than gap
// (phase-space distance). `replay` must reproduce the transported sample at
// seed parameter s. Returns the number of inserted samples.
int refine_leaf(Leaf& leaf, double gap, int max_insert,
                const std::function<LeafSample(double)>& replay,
                double edge_floor = 0.0);  // 0 -> 0.05 * gap

// Graph data of a leaf in an adapted chart.
struct LagrangianGraph {
  const AdaptedChart* chart = nullptr;
  std::vector<double> y;     // y2 per sample
  std::vector<double> F;     // eta2 per sample
  std::vector<double> eta1;  // energy coordinate per sample
  std::vector<double> phi;   // in-chart phase (action minus chart gauge)
  std::vector<Cplx> amp;     // materialized WKB amplitude
  std::vector<int> comp;
  std::vector<double> s;
  double gamma = 0.0;
  double energy_residual = 0.0;
  bool fold_free = true;  // y2 monotone within every component

  double sup_amp() const;
  bool empty() const { return y.empty(); }
};

// Express the alive part of a leaf as a graph over the chart's y2 axis.
// Amplitudes come from the transported flux: |a|^2 = m / |det d(y1,y2)/d(s,t)|.
LagrangianGraph leaf_graph(const PotentialModel& m, const Leaf& leaf,
                           const AdaptedChart& chart, bool require_graph);

// Interpolate F at y2 = yq within a component; nullopt outside the range.
std::optional<double> graph_value(const LagrangianGraph& g, int comp, double yq);

}  // namespace dpw
