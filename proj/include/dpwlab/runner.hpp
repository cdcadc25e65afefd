#pragma once

#include <memory>

#include "dpwlab/lagrangian.hpp"
#include "dpwlab/measure.hpp"
#include "dpwlab/pressure.hpp"
#include "dpwlab/scenario.hpp"

namespace dpw {

struct FlowCheckResult {
  double energy_drift_max = 0.0;
  double symplectic_defect_max = 0.0;
  double group_law_max = 0.0;
  int convexity_violations = 0;
  int escape_monotonicity_violations = 0;
  int points = 0;
  bool pass = false;
};

struct PressureSummary {
  // per s: separated and cover estimates
  std::vector<double> s;
  std::vector<PressureEstimate> separated;
  std::vector<PressureEstimate> cover_est;
  double half_weight_sum = 0.0;
  double rainy_bound = 0.0;  // exp(t0 (P(1/2) + 2 eps0))
  bool monotone = true;
};

struct CompareSummary {
  std::vector<double> hs;
  std::vector<std::string> symbols;
  // gap[i_h][i_symbol]
  std::vector<std::vector<ComparisonRow>> rows;
  double trend_slope = 0.0;  // log <gap> vs log(1/h)
  double trend_stderr = 0.0;
  int flagged_pairs = 0;
};

// Scenario-bound laboratory: caches the heavy intermediates (trapped set,
// cover, orbit ensemble, branch family, grid fields) across subcommands.
class Lab {
 public:
  explicit Lab(Scenario sc);
  ~Lab();

  const Scenario& scenario() const { return sc_; }
  Scenario& scenario() { return sc_; }

  const TrappedSample& trapped();
  const Cover& cover();
  const OrbitEnsemble& ensemble();
  BranchFamily& branches();
  const GridDpw& grid_dpw(double h);
  MeasureAtlas atlas(double h);
  std::vector<std::pair<std::string, PhaseSymbol>> default_symbols(int count);

  FlowCheckResult flow_check(unsigned seed_offset = 0);
  PressureSummary pressure_summary();
  InclinationTrace cone_trace();
  DecayReport decay_report();
  PushforwardSeries pushforward(const PhaseSymbol& sym);
  CompareSummary compare(const std::vector<double>& hs, int n_symbols);

  // CLI entry: runs one subcommand, writes artifacts + manifest under out_dir.
  // Returns 0 (ok), 2 (validation) or 3 (budget exceeded, partial artifacts).
  int run(const std::string& subcommand, const std::string& out_dir);

  const std::string& last_error() const { return last_error_; }

 private:
  Scenario sc_;
  std::unique_ptr<TrappedSample> trapped_;
  std::unique_ptr<Cover> cover_;
  std::unique_ptr<OrbitEnsemble> ensemble_;
  std::unique_ptr<BranchFamily> branches_;
  std::map<double, std::unique_ptr<GridDpw>> grids_;
  std::map<double, PressureEstimate> sep_cache_;
  std::string last_error_;

  PressureEstimate pressure_half();
};

std::string format_double(double v);

}  // namespace dpw
