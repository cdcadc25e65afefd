#include "dpwlab.h"

#include <cstdlib>
#include <string>

#include "dpwlab/runner.hpp"

struct dpw_lab_s {
  dpw::Lab lab;
  std::string err;
  explicit dpw_lab_s(dpw::Scenario sc) : lab(std::move(sc)) {}
};

namespace {

int wrap(dpw_lab_s* lab, const std::function<int()>& fn) {
  try {
    lab->err.clear();
    return fn();
  } catch (const dpw::Error& e) {
    lab->err = std::string(dpw::error_code_name(e.code)) + ": " + e.what();
    switch (e.code) {
      case dpw::ErrorCode::configuration:
      case dpw::ErrorCode::invalid_input:
        return 2;
      case dpw::ErrorCode::budget:
        return 3;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    lab->err = e.what();
    return 1;
  }
}

}  // namespace

extern "C" {

const char* dpw_version(void) { return "0.3.0"; }

int dpw_lab_open(const char* scenario_path, dpw_lab** out) {
  if (!scenario_path || !out) return 2;
  *out = nullptr;
  try {
    auto sc = dpw::Scenario::load_file(scenario_path);
    *out = new dpw_lab_s(std::move(sc));
    return 0;
  } catch (const std::exception&) {
    return 2;
  }
}

int dpw_lab_open_text(const char* scenario_text, dpw_lab** out) {
  if (!scenario_text || !out) return 2;
  *out = nullptr;
  try {
    auto sc = dpw::Scenario::load_text(scenario_text);
    *out = new dpw_lab_s(std::move(sc));
    return 0;
  } catch (const std::exception&) {
    return 2;
  }
}

void dpw_lab_close(dpw_lab* lab) { delete lab; }

const char* dpw_lab_error(const dpw_lab* lab) {
  return lab ? lab->err.c_str() : "null handle";
}

int dpw_lab_set(dpw_lab* lab, const char* key, const char* value) {
  if (!lab || !key || !value) return 2;
  return wrap(lab, [&]() {
    const std::string k = key;
    if (k == "h") {
      lab->lab.scenario().h_default = std::atof(value);
    } else if (k == "threads") {
      lab->lab.scenario().threads = std::atoi(value);
    } else {
      throw dpw::Error(dpw::ErrorCode::invalid_input, "unknown option " + k);
    }
    return 0;
  });
}

int dpw_lab_run(dpw_lab* lab, const char* subcommand, const char* out_dir) {
  if (!lab || !subcommand || !out_dir) return 2;
  return wrap(lab, [&]() {
    const int rc = lab->lab.run(subcommand, out_dir);
    if (rc != 0) lab->err = lab->lab.last_error();
    return rc;
  });
}

int dpw_lab_potential(const dpw_lab* lab, const double x[2], double* V,
                      double grad[2]) {
  if (!lab || !x || !V || !grad) return 2;
  auto* mut = const_cast<dpw_lab_s*>(lab);
  return wrap(mut, [&]() {
    const auto pe = dpw::evaluate_potential(mut->lab.scenario().potential,
                                            dpw::Vec2{x[0], x[1]});
    *V = pe.V;
    grad[0] = pe.grad(0);
    grad[1] = pe.grad(1);
    return 0;
  });
}

int dpw_lab_flow(const dpw_lab* lab, const double state[4], double t,
                 double step, double out[4]) {
  if (!lab || !state || !out) return 2;
  auto* mut = const_cast<dpw_lab_s*>(lab);
  return wrap(mut, [&]() {
    dpw::PhasePoint p{{state[0], state[1]}, {state[2], state[3]}};
    const auto q = dpw::flow(mut->lab.scenario().potential, p, t, step);
    out[0] = q.x(0);
    out[1] = q.x(1);
    out[2] = q.xi(0);
    out[3] = q.xi(1);
    return 0;
  });
}

}  // extern "C"
