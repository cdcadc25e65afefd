#include "dpwlab/cover.hpp"

#include <algorithm>
#include <cmath>

#include "dpwlab/profiles.hpp"

namespace dpw {

std::string Letter::name() const {
  switch (kind) {
    case CoverKind::Zero: return "0";
    case CoverKind::A1: return "a" + std::to_string(a1);
    case CoverKind::A2:
      return "b" + std::to_string(level) + "_" + std::to_string(ix) + "_" +
             std::to_string(iy) + "_" + std::to_string(itheta);
  }
  return "?";
}

int SymbolicWord::tau() const {
  int t = 0;
  for (int i = 1; i + 1 < static_cast<int>(letters.size()); ++i)
    if (letters[i].kind == CoverKind::Zero) t = i;
  return t;
}

std::string SymbolicWord::str() const {
  std::string s;
  for (size_t i = 0; i < letters.size(); ++i) {
    if (i) s += ".";
    s += letters[i].name();
  }
  return s;
}

Cover::Cover(const PotentialModel& model, const TrappedSample& trapped,
             const CoverSpec& spec)
    : model_(&model), spec_(spec) {
  eps0_ = spec.eps0 > 0.0 ? spec.eps0 : default_eps0(model);
  check_eps0(model, eps0_);
  const double band = 0.1 * eps0_;
  b_hi_ = 0.5 * eps0_;
  b_lo_ = 0.5 * eps0_ - band;
  if (spec_.eps2 <= 0.0) spec_.eps2 = spec_.eps_sec;
  r_tile_ = spec.r_tile > 0.0 ? spec.r_tile : 1.4 * model.cutoff_radius;

  // greedy eps_sec/2 net over the trapped sample, charts at the net points
  const double net = 0.5 * spec_.eps_sec;
  for (const auto& p : trapped.points) {
    if (static_cast<int>(a1_.size()) >= spec_.max_a1)
      throw Error(ErrorCode::budget, "A1 net exceeds max_a1; increase eps_sec");
    bool close = false;
    for (const auto& s : a1_)
      if (s.center.dist(p) < net) {
        close = true;
        break;
      }
    if (close) continue;
    try {
      SplittingFrame fr = splitting(model, p, spec_.splitting);
      ChartSpec cs = spec_.chart;
      cs.radius = spec_.eps_sec;
      A1Set s;
      s.center = p;
      s.radius = spec_.eps_sec;
      s.chart = build_adapted_chart(model, fr, cs);
      s.lambda = fr.lambda;
      a1_.push_back(std::move(s));
    } catch (const Error&) {
      // skip degenerate net points; coverage is checked afterwards
    }
  }
}

Letter Cover::a1_letter(int i) const {
  Letter l;
  l.kind = CoverKind::A1;
  l.a1 = static_cast<int16_t>(i);
  return l;
}

double Cover::zero_weight(const PhasePoint& rho) const {
  const double b = boundary_b(rho.x);
  return 1.0 - smoothstep((b - b_lo_) / (b_hi_ - b_lo_));
}

double Cover::a1_profile(const PhasePoint& rho, const A1Set& s) const {
  const double d = rho.dist(s.center);
  return plateau(d, 0.55 * s.radius, 0.9 * s.radius);
}

int Cover::level_of_radius(double r) const {
  if (r <= r_tile_) return 0;
  return std::min(20, 1 + static_cast<int>(std::floor(std::log2(r / r_tile_))));
}

Vec2 Cover::cell_center_x(const Letter& l) const {
  const double a = spec_.eps2 * std::pow(2.0, l.level);
  return Vec2{(l.ix + 0.5) * a, (l.iy + 0.5) * a};
}

double Cover::cell_pitch(const Letter& l) const {
  return spec_.eps2 * std::pow(2.0, l.level);
}

namespace {

// per-axis lattice partition: weight of cell i at coordinate u (in units of
// the pitch), transition band of width `band` centered on cell boundaries
double axis_weight(double u, int i, double band) {
  auto edge = [band](double v) { return smoothstep(v / band + 0.5); };
  return edge(u - i) - edge(u - i - 1.0);
}

}  // namespace

std::vector<LetterWeight> Cover::weights(const PhasePoint& rho) const {
  std::vector<LetterWeight> out;
  const double pz = zero_weight(rho);
  if (pz > 0.0) out.push_back({Letter{}, pz});
  double rest = 1.0 - pz;
  if (rest <= 0.0) return out;

  double wsum = 0.0;
  std::vector<std::pair<int, double>> a1w;
  for (int i = 0; i < static_cast<int>(a1_.size()); ++i) {
    const double w = a1_profile(rho, a1_[i]);
    if (w > 0.0) a1w.emplace_back(i, w);
    wsum += w;
  }
  const double scale = wsum > 1.0 ? rest / wsum : rest;
  for (auto& [i, w] : a1w) out.push_back({a1_letter(i), w * scale});
  const double rem = wsum >= 1.0 ? 0.0 : rest * (1.0 - wsum);
  if (rem <= 0.0) return out;

  // lattice cells at the dyadic level fixed by |x|
  const int lev = level_of_radius(rho.x.norm());
  const double a = spec_.eps2 * std::pow(2.0, lev);
  const double band = spec_.band_frac;
  const double ux = rho.x(0) / a, uy = rho.x(1) / a;
  const int ntheta = std::max(8, static_cast<int>(std::lround(2.0 * M_PI / a)));
  const double uth = std::atan2(rho.xi(1), rho.xi(0)) / (2.0 * M_PI / ntheta);

  for (int ix = static_cast<int>(std::floor(ux)) - 1;
       ix <= static_cast<int>(std::floor(ux)) + 1; ++ix) {
    const double wx = axis_weight(ux, ix, band);
    if (wx <= 0.0) continue;
    for (int iy = static_cast<int>(std::floor(uy)) - 1;
         iy <= static_cast<int>(std::floor(uy)) + 1; ++iy) {
      const double wy = axis_weight(uy, iy, band);
      if (wy <= 0.0) continue;
      for (int it = static_cast<int>(std::floor(uth)) - 1;
           it <= static_cast<int>(std::floor(uth)) + 1; ++it) {
        const double wt = axis_weight(uth, it, band);
        if (wt <= 0.0) continue;
        Letter l;
        l.kind = CoverKind::A2;
        l.level = static_cast<int16_t>(lev);
        l.ix = ix;
        l.iy = iy;
        l.itheta = ((it % ntheta) + ntheta) % ntheta;
        out.push_back({l, rem * wx * wy * wt});
      }
    }
  }
  return out;
}

double Cover::weight_of(const PhasePoint& rho, const Letter& l) const {
  for (const auto& lw : weights(rho))
    if (lw.letter == l) return lw.w;
  return 0.0;
}

int Cover::nearest_a1(const PhasePoint& rho) const {
  int best = -1;
  double bd = 0.0;
  for (int i = 0; i < static_cast<int>(a1_.size()); ++i) {
    if (a1_profile(rho, a1_[i]) <= 0.0) continue;
    const double d = rho.dist(a1_[i].center);
    if (best < 0 || d < bd) {
      best = i;
      bd = d;
    }
  }
  return best;
}

double Cover::min_a1_coverage(const TrappedSample& trapped) const {
  double worst = trapped.points.empty() ? 0.0 : 1e300;
  for (const auto& p : trapped.points) {
    double wsum = 0.0;
    for (const auto& s : a1_) wsum += a1_profile(p, s);
    worst = std::min(worst, wsum);
  }
  return worst;
}

}  // namespace dpw
