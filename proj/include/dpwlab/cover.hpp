#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dpwlab/hyperbolicity.hpp"

namespace dpw {

enum class CoverKind : uint8_t { A1, A2, Zero };

// Cover-set id. A1 letters are indices into the chart list; A2 letters are
// lattice cells (level, ix, iy, itheta) materialized on first touch.
struct Letter {
  CoverKind kind = CoverKind::Zero;
  int16_t a1 = -1;
  int16_t level = 0;
  int32_t ix = 0, iy = 0, itheta = 0;

  friend bool operator==(const Letter&, const Letter&) = default;
  friend auto operator<=>(const Letter&, const Letter&) = default;
  std::string name() const;
};

struct SymbolicWord {
  std::vector<Letter> letters;
  // index of the last zero letter among positions 1..N-1, else 0
  int tau() const;
  std::string str() const;
};

struct A1Set {
  PhasePoint center;
  double radius = 0.0;
  AdaptedChart chart;
  double lambda = 0.0;
};

struct CoverSpec {
  double eps_sec = 0.2;    // A1 ball radius (net spacing eps_sec/2)
  double eps2 = 0.0;       // A2 cell pitch at the core; 0 -> eps_sec
  double r_tile = 0.0;     // dyadic coarsening starts here; 0 -> auto
  double band_frac = 0.2;  // overlap band as a fraction of the cell pitch
  double eps0 = 0.0;       // 0 -> default_eps0(model)
  int max_a1 = 256;
  SplittingSpec splitting;
  ChartSpec chart;
};

struct LetterWeight {
  Letter letter;
  double w = 0.0;
};

// Partition of unity over A1 cells, A2 lattice cells and the outer region:
// pi_zero from the boundary function, A1 plateau profiles (normalized where
// they overlap), and the remaining mass spread over the exact lattice
// partition. Weights sum to 1 everywhere.
class Cover {
 public:
  Cover(const PotentialModel& model, const TrappedSample& trapped,
        const CoverSpec& spec);

  const std::vector<A1Set>& a1_sets() const { return a1_; }
  const CoverSpec& spec() const { return spec_; }
  double eps0() const { return eps0_; }
  const PotentialModel& model() const { return *model_; }

  // All letters with nonzero weight at rho, zero letter included, in a fixed
  // deterministic order. Weights sum to 1.
  std::vector<LetterWeight> weights(const PhasePoint& rho) const;
  double weight_of(const PhasePoint& rho, const Letter& l) const;
  double zero_weight(const PhasePoint& rho) const;

  // Nearest A1 set with positive weight, if any (itinerary bookkeeping).
  int nearest_a1(const PhasePoint& rho) const;

  // Diagnostics: min over A1 weights on the trapped sample (coverage) and
  // the measured distance from instantiated A2 cells to the trapped sample.
  double min_a1_coverage(const TrappedSample& trapped) const;

  Letter a1_letter(int i) const;
  Vec2 cell_center_x(const Letter& l) const;
  double cell_pitch(const Letter& l) const;

 private:
  const PotentialModel* model_;
  CoverSpec spec_;
  double eps0_ = 0.0;
  double b_lo_ = 0.0, b_hi_ = 0.0;  // zero-region transition band in b
  std::vector<A1Set> a1_;
  double r_tile_ = 0.0;

  double a1_profile(const PhasePoint& rho, const A1Set& s) const;
  int level_of_radius(double r) const;
};

}  // namespace dpw
