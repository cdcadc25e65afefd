#include "dpwlab/scenario.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dpw {

double ConfigValue::num() const {
  if (auto* d = std::get_if<double>(&v)) return *d;
  throw Error(ErrorCode::configuration, "config value is not a number");
}
bool ConfigValue::boolean() const {
  if (auto* b = std::get_if<bool>(&v)) return *b;
  throw Error(ErrorCode::configuration, "config value is not a boolean");
}
const std::string& ConfigValue::str() const {
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  throw Error(ErrorCode::configuration, "config value is not a string");
}
const std::vector<ConfigValue>& ConfigValue::arr() const {
  if (auto* a = std::get_if<std::vector<ConfigValue>>(&v)) return *a;
  throw Error(ErrorCode::configuration, "config value is not an array");
}

namespace {

struct Parser {
  const std::string& s;
  size_t i = 0;

  void skip_ws() {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }
  bool eat(char c) {
    skip_ws();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
  ConfigValue value() {
    skip_ws();
    if (i >= s.size()) throw Error(ErrorCode::configuration, "missing value");
    if (s[i] == '[') {
      ++i;
      std::vector<ConfigValue> arr;
      skip_ws();
      if (eat(']')) return ConfigValue{arr};
      for (;;) {
        arr.push_back(value());
        if (eat(']')) break;
        if (!eat(','))
          throw Error(ErrorCode::configuration, "expected , or ] in array");
      }
      return ConfigValue{arr};
    }
    if (s[i] == '"') {
      ++i;
      std::string out;
      while (i < s.size() && s[i] != '"') out += s[i++];
      if (i >= s.size())
        throw Error(ErrorCode::configuration, "unterminated string");
      ++i;
      return ConfigValue{out};
    }
    if (s.compare(i, 4, "true") == 0) {
      i += 4;
      return ConfigValue{true};
    }
    if (s.compare(i, 5, "false") == 0) {
      i += 5;
      return ConfigValue{false};
    }
    size_t j = i;
    while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) ||
                            s[j] == '+' || s[j] == '-' || s[j] == '.' ||
                            s[j] == 'e' || s[j] == 'E'))
      ++j;
    const std::string tok = s.substr(i, j - i);
    try {
      size_t used = 0;
      const double d = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      i = j;
      return ConfigValue{d};
    } catch (...) {
      throw Error(ErrorCode::configuration, "bad value token: " + tok);
    }
  }
};

}  // namespace

Config Config::parse_text(const std::string& text) {
  Config cfg;
  cfg.text_ = text;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    size_t b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw Error(ErrorCode::configuration,
                    "bad section header at line " + std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::configuration,
                  "expected key = value at line " + std::to_string(lineno));
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    const std::string full = section.empty() ? key : section + "." + key;
    std::string rhs = line.substr(eq + 1);
    Parser p{rhs, 0};
    cfg.kv_[full] = p.value();
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::io, "cannot open scenario file " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return parse_text(text);
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }
const ConfigValue* Config::find(const std::string& key) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? nullptr : &it->second;
}
double Config::num(const std::string& key, double def) const {
  auto* v = find(key);
  return v ? v->num() : def;
}
int Config::integer(const std::string& key, int def) const {
  auto* v = find(key);
  return v ? static_cast<int>(std::lround(v->num())) : def;
}
bool Config::boolean(const std::string& key, bool def) const {
  auto* v = find(key);
  return v ? v->boolean() : def;
}
std::string Config::str(const std::string& key, const std::string& def) const {
  auto* v = find(key);
  return v ? v->str() : def;
}
std::vector<double> Config::numbers(const std::string& key,
                                    const std::vector<double>& def) const {
  auto* v = find(key);
  if (!v) return def;
  std::vector<double> out;
  for (const auto& e : v->arr()) out.push_back(e.num());
  return out;
}

std::string fnv1a_hex(const std::string& data) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Scenario Scenario::load_text(const std::string& text) {
  Config cfg = Config::parse_text(text);
  Scenario sc;
  sc.raw_text = text;
  sc.config_hash = fnv1a_hex(text);
  sc.name = cfg.str("name", "scenario");

  if (auto* bumps = cfg.find("potential.bumps")) {
    for (const auto& row : bumps->arr()) {
      const auto& r = row.arr();
      if (r.size() != 4)
        throw Error(ErrorCode::configuration,
                    "potential.bumps rows must be [cx, cy, height, width]");
      Bump b;
      b.center = Vec2{r[0].num(), r[1].num()};
      b.height = r[2].num();
      b.width = r[3].num();
      sc.potential.bumps.push_back(b);
    }
  }
  sc.potential.cutoff_radius = cfg.num("potential.cutoff_radius", 1.0);
  sc.potential.dimension = cfg.integer("potential.dimension", 2);

  const auto xi = cfg.numbers("incoming.xi", {1.0, 0.0});
  if (xi.size() != 2)
    throw Error(ErrorCode::configuration, "incoming.xi must have 2 entries");
  sc.xi = Vec2{xi[0], xi[1]};

  sc.eps0 = cfg.num("layers.eps0", 0.0);
  sc.delta = cfg.num("layers.delta", 0.02);
  sc.t0 = cfg.num("time.t0", 1.0);
  sc.dt = cfg.num("time.dt", 1e-3);
  sc.dt_strict = cfg.num("time.dt_strict", 2e-5);
  sc.energy_tol = cfg.num("time.energy_tol", 1e-6);

  sc.trapped.dx = cfg.num("trapped.dx", 0.05);
  sc.trapped.ndir = cfg.integer("trapped.ndir", 32);
  sc.trapped.T_max = cfg.num("trapped.t_max", 8.0);
  sc.trapped.R_trap = cfg.num("trapped.r_trap", 0.0);
  sc.trapped.dt = cfg.num("trapped.dt", sc.dt);

  sc.splitting.T_win = cfg.num("hyperbolicity.t_win", 12.0);
  sc.splitting.dt = cfg.num("hyperbolicity.dt", sc.dt);
  sc.splitting.qr_dt = cfg.num("hyperbolicity.qr_dt", 0.05);
  sc.splitting.min_window = cfg.num("hyperbolicity.min_window", 1.0);
  sc.splitting.hyperbolic_floor = cfg.num("hyperbolicity.floor", 0.05);
  sc.splitting.seed = cfg.integer("run.seed", 12345);
  sc.chart.angle_floor = cfg.num("hyperbolicity.angle_floor", 1e-3);

  sc.cover.eps_sec = cfg.num("cover.eps_sec", 0.2);
  sc.cover.eps2 = cfg.num("cover.eps2", 0.0);
  sc.cover.r_tile = cfg.num("cover.r_tile", 0.0);
  sc.cover.band_frac = cfg.num("cover.band_frac", 0.2);
  sc.cover.max_a1 = cfg.integer("cover.max_a1", 256);
  sc.cover.eps0 = sc.eps0;
  sc.cover.splitting = sc.splitting;
  sc.cover.chart = sc.chart;

  sc.pressure_s = cfg.numbers("pressure.s_values", {0.0, 0.5, 1.0});
  sc.pressure_eps = cfg.numbers("pressure.eps_list", {});
  sc.pressure_t = cfg.numbers("pressure.t_list", {});
  sc.pressure_t_max = cfg.num("pressure.t_max", 10.0);
  sc.pressure_node_dt = cfg.num("pressure.node_dt", 0.05);
  sc.eps0_slack = cfg.num("pressure.eps0_slack", 0.05);

  sc.wkb.n_max = cfg.integer("wkb.n_max", 40);
  sc.wkb.prune_tol = cfg.num("wkb.prune_tol", 1e-8);
  sc.wkb.branch_cap = static_cast<long>(cfg.num("wkb.branch_cap", 1e6));
  sc.wkb.t0 = sc.t0;
  sc.wkb.dt = sc.dt;
  sc.wkb.seed_samples = cfg.integer("wkb.seed_samples", 160);
  sc.wkb.seed_halfwidth = cfg.num("wkb.seed_halfwidth", 0.0);
  sc.wkb.refine_gap = cfg.num("wkb.refine_gap", 0.0);
  sc.wkb.d_merge = cfg.num("wkb.d_merge", 0.0);
  sc.wkb.max_leaf_samples = cfg.integer("wkb.max_leaf_samples", 4000);
  sc.wkb.n_pre = cfg.integer("wkb.n_pre", 0);
  sc.wkb.n_suf = cfg.integer("wkb.n_suf", 0);
  sc.gamma_uns = cfg.num("wkb.gamma_uns", 0.1);
  sc.gamma0 = cfg.num("wkb.gamma0", 0.5);
  sc.m_r = cfg.num("wkb.m_r", 0.0);

  sc.grid_n = cfg.integer("grid.n", 256);
  sc.grid_cap = cfg.integer("grid.n_cap", 1024);
  sc.grid_extent = cfg.num("grid.extent", 0.0);
  sc.h_default = cfg.num("grid.h_default", 0.015625);
  sc.h_ladder = cfg.numbers("grid.h_ladder", {});
  sc.grid_dpw.t0 = sc.t0;
  sc.grid_dpw.n_iter = cfg.integer("grid.n_iter", 0);
  sc.grid_dpw.iter_factor = cfg.num("grid.iter_factor", 2.0);
  sc.grid_dpw.dt_safety = cfg.num("grid.dt_safety", 0.9);
  sc.grid_dpw.head_probe = cfg.integer("grid.head_probe", 8);

  sc.masks_auto = !cfg.has("masks.chi_in");
  if (!sc.masks_auto) {
    sc.masks.chi_in = cfg.num("masks.chi_in", 0.0);
    sc.masks.chi_out = cfg.num("masks.chi_out", 0.0);
    sc.masks.chit_in = cfg.num("masks.chit_in", 0.0);
    sc.masks.chit_out = cfg.num("masks.chit_out", 0.0);
    sc.masks.tin0 = cfg.num("masks.tin0", 0.0);
    sc.masks.tin1 = cfg.num("masks.tin1", 0.0);
    sc.masks.tout0 = cfg.num("masks.tout0", 0.0);
    sc.masks.tout1 = cfg.num("masks.tout1", 0.0);
  }

  sc.merge_tol = cfg.num("measure.merge_tol", 1e-6);
  sc.fd_tol = cfg.num("measure.fd_tol", 5e-3);
  sc.pushforward.dx = cfg.num("measure.dx", 0.05);
  sc.pushforward.t_max = cfg.num("measure.t_max", 10.0);
  sc.pushforward.dt_series = cfg.num("measure.dt_series", 0.5);
  sc.pushforward.dt_flow = cfg.num("measure.dt_flow", sc.dt);

  sc.seed = cfg.integer("run.seed", 12345);
  sc.threads = cfg.integer("run.threads", 1);

  sc.potential.validate();
  return sc;
}

Scenario Scenario::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::io, "cannot open scenario file " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return load_text(text);
}

double Scenario::effective_extent() const {
  return grid_extent > 0.0 ? grid_extent : 2.5 * potential.cutoff_radius;
}

int Scenario::grid_points_for(double h) const {
  // >= 8 points per 2 pi h wavelength
  const double need = 8.0 * effective_extent() / (2.0 * M_PI * h);
  int n = 32;
  while (n < need) n *= 2;
  const int base = std::min(grid_n, grid_cap);
  n = std::max(n, base);
  if (n > grid_cap)
    throw Error(ErrorCode::resolution,
                "grid cap too small to resolve the wavelength at this h");
  return n;
}

MaskSpec Scenario::effective_masks() const {
  if (!masks_auto) return masks;
  return MaskSpec::defaults(potential.cutoff_radius, box_halfwidth(), t0);
}

std::vector<ValidationIssue> Scenario::validate() const {
  std::vector<ValidationIssue> issues;
  auto err = [&](const std::string& f, const std::string& m2) {
    issues.push_back({f, m2});
  };
  if (std::abs(xi.norm() - 1.0) > 1e-9)
    err("incoming.xi", "must be a unit vector");
  if (!(t0 > 0.0)) err("time.t0", "must be positive");
  if (!(dt > 0.0)) err("time.dt", "must be positive");
  try {
    PotentialModel m = potential;
    m.validate();
  } catch (const Error& e) {
    err("potential", e.what());
  }
  const double e0 = eps0 > 0.0 ? eps0 : default_eps0(potential);
  try {
    check_eps0(potential, e0);
  } catch (const Error& e) {
    err("layers.eps0", e.what());
  }
  try {
    effective_masks().validate(t0, box_halfwidth(), potential.cutoff_radius);
  } catch (const Error& e) {
    err("masks", e.what());
  }
  for (double h : h_ladder) {
    try {
      (void)grid_points_for(h);
    } catch (const Error& e) {
      err("grid.h_ladder", std::string(e.what()) + " (h = " + std::to_string(h) + ")");
    }
  }
  // one-step containment: points of the outer region stay outside the
  // interaction core after one block (sampled)
  {
    const double r_half = std::sqrt(std::max(0.0, 4.0 / (e0 * e0) - 1.0));
    bool ok = true;
    for (int k = 0; k < 64; ++k) {
      const double th = 2.0 * M_PI * k / 64.0;
      PhasePoint p{Vec2{r_half * 1.01, 0.0},
                   Vec2{-std::cos(th), std::sin(th)}};
      PhasePoint q = p;
      q.x += 2.0 * t0 * q.xi;  // free step dominates outside the support
      if (boundary_b(q.x) >= e0) ok = false;
    }
    if (!ok)
      err("time.t0", "one-step containment fails: t0 too large for eps0");
  }
  return issues;
}

}  // namespace dpw
