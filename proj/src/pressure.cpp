#include "dpwlab/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

namespace dpw {

namespace {

// Gram-Schmidt step for the 2-frame spanning E^{+0}; returns log of the
// volume growth.
double gs2(Vec4& a, Vec4& b) {
  double la = a.norm();
  a /= la;
  b -= b.dot(a) * a;
  double lb = b.norm();
  b /= lb;
  return std::log(la) + std::log(lb);
}

// cumulative lambda^+ along the forward orbit, sampled at node times
std::vector<double> lambda_along(const PotentialModel& m, const PhasePoint& rho,
                                 const Vec4& eplus, double t_max, double node_dt,
                                 double dt) {
  std::vector<double> out;
  const int n = std::max(1, static_cast<int>(std::lround(t_max / node_dt)));
  Vec4 a = hamilton_field(m, rho).normalized();
  Vec4 b = eplus;
  double accum = 0.0;
  gs2(a, b);
  out.push_back(0.0);
  PhasePoint p = rho;
  FlowOptions fopt;
  fopt.check_energy = false;
  for (int k = 0; k < n; ++k) {
    auto [pn, tb] = variational_flow(m, p, node_dt, dt, fopt);
    a = tb.matrix * a;
    b = tb.matrix * b;
    accum += gs2(a, b);
    p = pn;
    out.push_back(accum);
  }
  return out;
}

}  // namespace

JacobianRecord unstable_jacobian(const PotentialModel& m, const PhasePoint& rho,
                                 double t, const JacobianSpec& spec) {
  JacobianRecord rec;
  rec.at = rho;
  rec.t = t;
  if (t == 0.0) return rec;
  SplittingFrame fr = splitting(m, rho, spec.splitting);
  if (t > 0.0) {
    const auto lam =
        lambda_along(m, rho, fr.E_plus, t, std::min(spec.qr_dt, t), spec.dt);
    rec.lambda_plus = lam.back();
  } else {
    const auto lam = lambda_along(m, rho, fr.E_plus, t,
                                  std::min(spec.qr_dt, -t), spec.dt);
    rec.lambda_plus = lam.back();
  }
  return rec;
}

OrbitEnsemble::OrbitEnsemble(const PotentialModel& m,
                             const std::vector<PhasePoint>& points,
                             double t_max, double node_dt,
                             const JacobianSpec& spec, int threads) {
  t_max_ = t_max;
  node_dt_ = node_dt;
  const int n = static_cast<int>(points.size());
  nodes_.assign(n, {});
  lam_.assign(n, {});
  horizon_.assign(n, 0.0);
  const int nt = std::max(1, std::min(threads, n == 0 ? 1 : n));
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      const PhasePoint rho = points[i];
      const double R = 1.5 * m.cutoff_radius + 1.0;
      // ensemble points must hug the trapped set from the past as well
      if (bounded_horizon(m, rho, spec.t_back_near, R, spec.dt, -1) <
          spec.t_back_near)
        continue;
      SplittingFrame fr;
      try {
        fr = splitting(m, rho, spec.splitting);
      } catch (const Error&) {
        continue;
      }
      const double hor =
          bounded_horizon(m, rho, t_max, R, spec.dt, +1);
      const int nn = std::max(
          1, static_cast<int>(std::floor(hor / node_dt)));
      FlowOptions fopt;
      fopt.check_energy = false;
      std::vector<PhasePoint> orb;
      orb.reserve(nn + 1);
      orb.push_back(rho);
      PhasePoint p = rho;
      for (int k = 0; k < nn; ++k) {
        p = flow(m, p, node_dt, spec.dt, fopt);
        orb.push_back(p);
      }
      nodes_[i] = std::move(orb);
      lam_[i] = lambda_along(m, rho, fr.E_plus, nn * node_dt, node_dt, spec.dt);
      horizon_[i] = nn * node_dt;
    }
  };
  for (int k = 0; k < nt; ++k) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  // drop points that failed the filters (left as empty stubs)
  std::vector<std::vector<PhasePoint>> keep_nodes;
  std::vector<std::vector<double>> keep_lam;
  std::vector<double> keep_hor;
  for (int i = 0; i < n; ++i)
    if (nodes_[i].size() > 1) {
      keep_nodes.push_back(std::move(nodes_[i]));
      keep_lam.push_back(std::move(lam_[i]));
      keep_hor.push_back(horizon_[i]);
    }
  nodes_.swap(keep_nodes);
  lam_.swap(keep_lam);
  horizon_.swap(keep_hor);
}

int OrbitEnsemble::eligible_count(double t) const {
  int c = 0;
  for (double hz : horizon_)
    if (hz >= t) ++c;
  return c;
}

double OrbitEnsemble::lambda(int i, double t) const {
  const auto& l = lam_[i];
  const double u = std::clamp(t / node_dt_, 0.0, double(l.size() - 1));
  const int k = std::min(static_cast<int>(u), static_cast<int>(l.size()) - 2);
  if (l.size() < 2) return 0.0;
  return l[k] + (u - k) * (l[k + 1] - l[k]);
}

double OrbitEnsemble::dist_sup(int i, int j, double t) const {
  const int kmax = std::min({static_cast<int>(std::lround(t / node_dt_)),
                             static_cast<int>(nodes_[i].size()) - 1,
                             static_cast<int>(nodes_[j].size()) - 1});
  double d = 0.0;
  for (int k = 0; k <= kmax; ++k)
    d = std::max(d, nodes_[i][k].dist(nodes_[j][k]));
  return d;
}

namespace {

struct FitResult {
  double slope = 0.0;
  double resid = 0.0;
};

FitResult fit_rate(const std::vector<std::pair<double, double>>& tz) {
  FitResult fr;
  const int n = static_cast<int>(tz.size());
  if (n < 2) return fr;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto& [t, lz] : tz) {
    sx += t;
    sy += lz;
    sxx += t * t;
    sxy += t * lz;
  }
  const double den = n * sxx - sx * sx;
  fr.slope = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  double r2 = 0.0;
  const double b = (sy - fr.slope * sx) / n;
  for (auto& [t, lz] : tz) {
    const double e = lz - (fr.slope * t + b);
    r2 += e * e;
  }
  fr.resid = std::sqrt(r2 / n) / std::max(1.0, std::abs(tz.back().first));
  return fr;
}

PressureEstimate assemble_estimate(
    double s, const std::string& method,
    const std::vector<PressureLadderRow>& ladder,
    const std::vector<double>& eps_levels) {
  PressureEstimate est;
  est.s = s;
  est.method = method;
  est.ladder = ladder;
  std::vector<double> slopes;
  double resid_last = 0.0;
  for (double e : eps_levels) {
    std::vector<std::pair<double, double>> tz;
    for (const auto& row : ladder)
      if (row.eps == e && row.Z > 0.0) tz.emplace_back(row.t, std::log(row.Z));
    const auto fr = fit_rate(tz);
    if (tz.size() >= 2) {
      slopes.push_back(fr.slope);
      resid_last = fr.resid;
    }
  }
  if (slopes.empty())
    throw Error(ErrorCode::resolution, "no usable (eps,t) ladder rows");
  est.value = slopes.back();  // smallest eps evaluated last
  double spread = 0.0;
  if (slopes.size() >= 2)
    spread = std::abs(slopes[slopes.size() - 1] - slopes[slopes.size() - 2]);
  est.uncertainty = spread + resid_last;
  return est;
}

}  // namespace

PressureEstimate separated_pressure(const OrbitEnsemble& ens, double s,
                                    const std::vector<double>& eps_list,
                                    const std::vector<double>& t_list) {
  if (ens.size() < 2)
    throw Error(ErrorCode::resolution, "trapped sample too sparse");
  std::vector<double> eps_sorted = eps_list;
  std::sort(eps_sorted.rbegin(), eps_sorted.rend());
  std::vector<PressureLadderRow> ladder;
  for (double eps : eps_sorted) {
    for (double t : t_list) {
      if (ens.eligible_count(t) < 2) continue;
      // greedy maximal separated subset (fixed insertion order)
      std::vector<int> sel;
      for (int c = 0; c < ens.size(); ++c) {
        if (ens.horizon(c) < t) continue;
        bool ok = true;
        for (int j : sel)
          if (ens.dist_sup(c, j, t) <= eps) {
            ok = false;
            break;
          }
        if (ok) sel.push_back(c);
      }
      PressureLadderRow row;
      row.eps = eps;
      row.t = t;
      row.count = static_cast<int>(sel.size());
      for (int j : sel) row.Z += std::exp(-s * ens.lambda(j, t));
      row.rate = row.Z > 0.0 ? std::log(row.Z) / t : 0.0;
      ladder.push_back(row);
    }
  }
  return assemble_estimate(s, "separated", ladder, eps_sorted);
}

CoverPressureResult cover_pressure(const OrbitEnsemble& ens, const Cover& cover,
                                   double s, double t0,
                                   const std::vector<double>& T_list) {
  CoverPressureResult out;
  if (ens.size() == 0)
    throw Error(ErrorCode::resolution, "empty ensemble");
  // itinerary letters at t0 nodes
  const int max_steps =
      static_cast<int>(std::floor(ens.t_max() / t0));
  std::vector<std::vector<int>> itin(ens.size());
  bool any_itin = false;
  for (int i = 0; i < ens.size(); ++i) {
    for (int k = 0; k <= max_steps; ++k) {
      const double t = k * t0;
      if (t > ens.horizon(i)) break;
      const int node = static_cast<int>(std::lround(t / ens.node_dt()));
      if (node >= static_cast<int>(ens.nodes(i).size())) break;
      const int a = cover.nearest_a1(ens.nodes(i)[node]);
      if (a < 0) {
        if (k == 0)
          throw Error(ErrorCode::coverage,
                      "cover does not cover trapped sample");
        break;  // the orbit drifted out of the A1 region
      }
      itin[i].push_back(a);
    }
    if (!itin[i].empty()) any_itin = true;
  }
  if (!any_itin)
    throw Error(ErrorCode::coverage, "no itineraries within the cover");

  std::vector<PressureLadderRow> ladder;
  for (double T : T_list) {
    const int L = std::max(1, static_cast<int>(std::lround(T / t0)));
    std::map<std::vector<int>, double> words;  // word -> min lambda_T
    for (int i = 0; i < ens.size(); ++i) {
      if (static_cast<int>(itin[i].size()) < L + 1) continue;
      std::vector<int> w(itin[i].begin(), itin[i].begin() + L + 1);
      const double lam = ens.lambda(i, T);
      auto it = words.find(w);
      if (it == words.end())
        words[w] = lam;
      else
        it->second = std::min(it->second, lam);
    }
    if (words.empty()) continue;
    PressureLadderRow row;
    row.eps = 0.0;
    row.t = T;
    row.count = static_cast<int>(words.size());
    for (auto& [w, lam] : words) row.Z += std::exp(-s * lam);
    row.rate = row.Z > 0.0 ? std::log(row.Z) / T : 0.0;
    ladder.push_back(row);
  }
  out.estimate = assemble_estimate(s, "cover", ladder, {0.0});

  // per-letter weights at the block time t0
  std::map<int, double> letter_min_lambda;
  for (int i = 0; i < ens.size(); ++i) {
    if (itin[i].empty()) continue;
    const double lam = ens.lambda(i, t0);
    auto it = letter_min_lambda.find(itin[i][0]);
    if (it == letter_min_lambda.end())
      letter_min_lambda[itin[i][0]] = lam;
    else
      it->second = std::min(it->second, lam);
  }
  for (auto& [a, lam] : letter_min_lambda) {
    CoverWeightRow row;
    row.letter = cover.a1_letter(a).name();
    row.S_t0 = -lam;
    row.half_weight = std::exp(-0.5 * lam);
    out.half_weight_sum += row.half_weight;
    out.letter_weights.push_back(row);
  }
  return out;
}

double ToyShift::map(double x) const {
  const double w = std::exp(-lambda);
  for (int i = 0; i < nsym; ++i) {
    const double lo = nsym == 1 ? 0.0 : i * (1.0 - w) / (nsym - 1);
    if (x >= lo && x <= lo + w) return (x - lo) / w;
  }
  return std::nan("");
}

int ToyShift::symbol(double x) const {
  const double w = std::exp(-lambda);
  for (int i = 0; i < nsym; ++i) {
    const double lo = nsym == 1 ? 0.0 : i * (1.0 - w) / (nsym - 1);
    if (x >= lo && x <= lo + w) return i;
  }
  return -1;
}

std::vector<double> ToyShift::trapped_sample(int grid, int survive_steps) const {
  std::vector<double> out;
  for (int i = 0; i < grid; ++i) {
    const double x0 = (i + 0.5) / grid;
    double x = x0;
    bool ok = true;
    for (int k = 0; k < survive_steps; ++k) {
      x = map(x);
      if (std::isnan(x)) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(x0);
  }
  return out;
}

std::vector<double> ToyShift::cylinder_points(int depth) const {
  const double w = std::exp(-lambda);
  std::vector<double> pts{0.5};
  for (int k = 0; k < depth; ++k) {
    std::vector<double> next;
    next.reserve(pts.size() * nsym);
    for (double y : pts)
      for (int i = 0; i < nsym; ++i) {
        const double lo = nsym == 1 ? 0.0 : i * (1.0 - w) / (nsym - 1);
        next.push_back(lo + w * y);
      }
    pts.swap(next);
    if (pts.size() > (1u << 20)) break;
  }
  std::sort(pts.begin(), pts.end());
  return pts;
}

double ToyShift::exact_pressure(double s) const {
  return std::log(static_cast<double>(nsym)) - s * lambda;
}

PressureEstimate toy_separated_pressure(const ToyShift& toy, double s,
                                        const std::vector<double>& eps_list,
                                        const std::vector<int>& t_list) {
  const int tmax = *std::max_element(t_list.begin(), t_list.end());
  auto pts = toy.cylinder_points(std::min(tmax + 4, 15));
  if (pts.size() < 2) throw Error(ErrorCode::resolution, "toy sample too sparse");
  // orbits
  std::vector<std::vector<double>> orb(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    double x = pts[i];
    orb[i].push_back(x);
    for (int k = 0; k < tmax; ++k) {
      x = toy.map(x);
      orb[i].push_back(x);
    }
  }
  std::vector<double> eps_sorted = eps_list;
  std::sort(eps_sorted.rbegin(), eps_sorted.rend());
  std::vector<PressureLadderRow> ladder;
  for (double eps : eps_sorted) {
    for (int t : t_list) {
      std::vector<int> sel;
      for (int c = 0; c < static_cast<int>(pts.size()); ++c) {
        bool ok = true;
        // recently selected points are the likely close ones (sorted order)
        for (auto it = sel.rbegin(); it != sel.rend(); ++it) {
          double d = 0.0;
          for (int k = 0; k <= t; ++k)
            d = std::max(d, std::abs(orb[c][k] - orb[*it][k]));
          if (d <= eps) {
            ok = false;
            break;
          }
        }
        if (ok) sel.push_back(c);
      }
      PressureLadderRow row;
      row.eps = eps;
      row.t = t;
      row.count = static_cast<int>(sel.size());
      row.Z = sel.size() * std::exp(-s * toy.lambda * t);
      row.rate = row.Z > 0.0 ? std::log(row.Z) / t : 0.0;
      ladder.push_back(row);
    }
  }
  return assemble_estimate(s, "separated", ladder, eps_sorted);
}

PressureEstimate toy_cover_pressure(const ToyShift& toy, double s,
                                    const std::vector<int>& T_list) {
  const int tmax = *std::max_element(T_list.begin(), T_list.end());
  auto pts = toy.cylinder_points(std::min(tmax + 2, 16));
  std::vector<PressureLadderRow> ladder;
  for (int T : T_list) {
    std::map<std::vector<int>, int> words;
    for (double x0 : pts) {
      std::vector<int> w;
      double x = x0;
      bool ok = true;
      for (int k = 0; k <= T; ++k) {
        const int sym = toy.symbol(x);
        if (sym < 0) {
          ok = false;
          break;
        }
        w.push_back(sym);
        x = toy.map(x);
      }
      if (ok) words[w] += 1;
    }
    PressureLadderRow row;
    row.eps = 0.0;
    row.t = T;
    row.count = static_cast<int>(words.size());
    row.Z = words.size() * std::exp(-s * toy.lambda * T);
    row.rate = row.Z > 0.0 ? std::log(row.Z) / T : 0.0;
    ladder.push_back(row);
  }
  return assemble_estimate(s, "cover", ladder, {0.0});
}

}  // namespace dpw
