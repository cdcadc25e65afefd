#pragma once

#include <functional>

#include "dpwlab/cover.hpp"

namespace dpw {

struct JacobianRecord {
  PhasePoint at;
  double t = 0.0;
  double lambda_plus = 0.0;  // log volume growth of E+ (+) flow direction
};

struct JacobianSpec {
  double dt = 2e-3;
  double qr_dt = 0.05;
  double t_back_near = 1.0;  // backward boundedness required of ensemble points
  SplittingSpec splitting;
};

// Accumulated log of QR diagonal growth of the [H_p, E+] frame under dPhi^t.
JacobianRecord unstable_jacobian(const PotentialModel& m, const PhasePoint& rho,
                                 double t, const JacobianSpec& spec);

struct PressureLadderRow {
  double eps = 0.0;
  double t = 0.0;
  double Z = 0.0;
  double rate = 0.0;  // log(Z)/t
  int count = 0;
};

struct PressureEstimate {
  double s = 0.0;
  double value = 0.0;
  double uncertainty = 0.0;
  std::string method;
  std::vector<PressureLadderRow> ladder;
};

// Precomputed orbit nodes and cumulative unstable Jacobian for an ensemble of
// trapped points; the raw material of both pressure definitions.
class OrbitEnsemble {
 public:
  OrbitEnsemble(const PotentialModel& m, const std::vector<PhasePoint>& points,
                double t_max, double node_dt, const JacobianSpec& spec,
                int threads = 1);

  int size() const { return static_cast<int>(nodes_.size()); }
  double t_max() const { return t_max_; }
  double node_dt() const { return node_dt_; }
  const std::vector<PhasePoint>& nodes(int i) const { return nodes_[i]; }
  const PhasePoint& point(int i) const { return nodes_[i].front(); }
  // forward time over which the orbit of point i stays bounded (<= t_max)
  double horizon(int i) const { return horizon_[i]; }
  int eligible_count(double t) const;
  double lambda(int i, double t) const;
  // sup over node times <= t of the phase-space distance
  double dist_sup(int i, int j, double t) const;

 private:
  double t_max_ = 0.0, node_dt_ = 0.0;
  std::vector<std::vector<PhasePoint>> nodes_;
  std::vector<std::vector<double>> lam_;
  std::vector<double> horizon_;
};

// Greedy maximal (eps,t)-separated subsets; Z_t = sum exp(-s lambda_t^+).
// The value is the fitted rate at the smallest eps; the uncertainty combines
// the eps-plateau spread and the fit residual.
PressureEstimate separated_pressure(const OrbitEnsemble& ens, double s,
                                    const std::vector<double>& eps_list,
                                    const std::vector<double>& t_list);

struct CoverWeightRow {
  std::string letter;
  double S_t0 = 0.0;       // -inf lambda_{t0} over the set
  double half_weight = 0.0;  // exp(S_t0 / 2)
};

struct CoverPressureResult {
  PressureEstimate estimate;
  std::vector<CoverWeightRow> letter_weights;
  double half_weight_sum = 0.0;  // sum exp(S_t0/2) vs exp(t0 (P(1/2)+2 eps0))
};

// Word-based pressure over the A1 cover: itinerary words of length T/t0,
// S_T(W_alpha) = -min lambda_T over the samples realizing the word.
CoverPressureResult cover_pressure(const OrbitEnsemble& ens, const Cover& cover,
                                   double s, double t0,
                                   const std::vector<double>& T_list);

// Piecewise-linear full shift on `nsym` symbols with uniform expansion
// e^lambda: branch i maps I_i affinely onto [0,1]. Exact pressure
// P(s) = log(nsym) - s*lambda. Used as the oracle system.
struct ToyShift {
  double lambda = 1.0;
  int nsym = 2;

  double map(double x) const;          // escapes return NaN
  int symbol(double x) const;          // -1 outside the branches
  std::vector<double> trapped_sample(int grid, int survive_steps) const;
  // one point per depth-n cylinder (midpoints pulled back through the
  // inverse branches); exactly nsym^depth points of the invariant set
  std::vector<double> cylinder_points(int depth) const;
  double exact_pressure(double s) const;
};

PressureEstimate toy_separated_pressure(const ToyShift& toy, double s,
                                        const std::vector<double>& eps_list,
                                        const std::vector<int>& t_list);
PressureEstimate toy_cover_pressure(const ToyShift& toy, double s,
                                    const std::vector<int>& T_list);

}  // namespace dpw
