// C API smoke tests (exercises the shared library surface end to end).
#include <cassert>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "dpwlab.h"

static const char* kScenario =
    "name = \"capi\"\n"
    "[potential]\n"
    "cutoff_radius = 0.12\n"
    "[incoming]\n"
    "xi = [1.0, 0.0]\n"
    "[time]\n"
    "t0 = 0.04\n"
    "dt = 1e-3\n"
    "dt_strict = 5e-5\n"
    "[trapped]\n"
    "dx = 0.05\n"
    "ndir = 8\n"
    "t_max = 2.0\n"
    "[grid]\n"
    "n = 64\n"
    "extent = 1.5\n"
    "h_default = 0.0625\n";

int main() {
  assert(std::strlen(dpw_version()) > 0);

  dpw_lab* lab = nullptr;
  int rc = dpw_lab_open_text(kScenario, &lab);
  assert(rc == 0 && lab != nullptr);

  // pointwise probes
  double V = -1.0, grad[2] = {9, 9};
  const double x[2] = {0.3, 0.1};
  rc = dpw_lab_potential(lab, x, &V, grad);
  assert(rc == 0 && V == 0.0 && grad[0] == 0.0);

  const double state[4] = {0.0, 0.0, 1.0, 0.0};
  double out[4];
  rc = dpw_lab_flow(lab, state, 0.5, 1e-3, out);
  assert(rc == 0);
  assert(std::fabs(out[0] - 1.0) < 1e-9);

  // a run through the public surface
  rc = dpw_lab_run(lab, "flow-check", "/tmp/dpw_capi_out");
  if (rc != 0) std::fprintf(stderr, "run failed: %s\n", dpw_lab_error(lab));
  assert(rc == 0);

  // error paths
  rc = dpw_lab_run(lab, "bogus", "/tmp/dpw_capi_out2");
  assert(rc == 2);
  assert(std::strlen(dpw_lab_error(lab)) > 0);
  dpw_lab_close(lab);

  dpw_lab* bad = nullptr;
  rc = dpw_lab_open_text("name = \"x\"\n[potential]\nbumps = [[0,0,1]]\n", &bad);
  assert(rc == 2 && bad == nullptr);

  std::printf("capi tests passed\n");
  return 0;
}
