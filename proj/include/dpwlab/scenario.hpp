#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dpwlab/measure.hpp"

namespace dpw {

// Minimal structured-text config: [section] headers, key = value lines,
// values are numbers, booleans, quoted strings or (nested) arrays.
struct ConfigValue {
  std::variant<double, bool, std::string, std::vector<ConfigValue>> v;
  double num() const;
  bool boolean() const;
  const std::string& str() const;
  const std::vector<ConfigValue>& arr() const;
};

class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text);

  bool has(const std::string& key) const;
  double num(const std::string& key, double def) const;
  int integer(const std::string& key, int def) const;
  bool boolean(const std::string& key, bool def) const;
  std::string str(const std::string& key, const std::string& def) const;
  std::vector<double> numbers(const std::string& key,
                              const std::vector<double>& def) const;
  const ConfigValue* find(const std::string& key) const;
  const std::string& text() const { return text_; }

 private:
  std::map<std::string, ConfigValue> kv_;  // "section.key"
  std::string text_;
};

struct ValidationIssue {
  std::string field;
  std::string message;
};

struct Scenario {
  std::string name;
  PotentialModel potential;
  Vec2 xi{1.0, 0.0};
  double eps0 = 0.0;  // 0 -> auto
  double delta = 0.02;
  double t0 = 1.0;
  double dt = 1e-3;
  double dt_strict = 2e-5;
  double energy_tol = 1e-6;

  TrappedSamplingSpec trapped;
  SplittingSpec splitting;
  ChartSpec chart;
  CoverSpec cover;

  std::vector<double> pressure_s{0.0, 0.5, 1.0};
  std::vector<double> pressure_eps;
  std::vector<double> pressure_t;
  double pressure_t_max = 10.0;
  double pressure_node_dt = 0.05;
  double eps0_slack = 0.05;

  BranchSpec wkb;
  double gamma_uns = 0.1;
  double gamma0 = 0.5;
  double m_r = 0.0;  // 0 -> auto from the fitted pressure

  int grid_n = 256;
  int grid_cap = 1024;
  double grid_extent = 0.0;  // 0 -> 2.5 * cutoff radius
  double h_default = 0.015625;
  std::vector<double> h_ladder;
  GridDpwSpec grid_dpw;
  MaskSpec masks;
  bool masks_auto = true;

  double merge_tol = 1e-6;
  double fd_tol = 5e-3;
  PushforwardSpec pushforward;

  unsigned seed = 12345;
  int threads = 1;
  std::string config_hash;
  std::string raw_text;

  // grid sized for the wavelength resolution invariant at this h
  int grid_points_for(double h) const;
  MaskSpec effective_masks() const;
  double box_halfwidth() const { return 0.5 * effective_extent(); }
  double effective_extent() const;

  static Scenario load_file(const std::string& path);
  static Scenario load_text(const std::string& text);

  std::vector<ValidationIssue> validate() const;
};

std::string fnv1a_hex(const std::string& data);

}  // namespace dpw
