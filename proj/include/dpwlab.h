/* dpwlab C API: scattering laboratory for semiclassical Schrodinger
 * operators with hyperbolic trapped sets.
 *
 * All functions return 0 on success. Nonzero codes:
 *   2  scenario validation / configuration failure
 *   3  compute budget exceeded (partial artifacts were written)
 *   1  any other runtime failure
 * The last error message of a lab handle is available via dpw_lab_error().
 */
#ifndef DPWLAB_H
#define DPWLAB_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct dpw_lab_s dpw_lab;

/* Library version string, static storage. */
const char* dpw_version(void);

/* Create a lab from a scenario file / from scenario text. On success *out
 * receives an owned handle (release with dpw_lab_close). */
int dpw_lab_open(const char* scenario_path, dpw_lab** out);
int dpw_lab_open_text(const char* scenario_text, dpw_lab** out);

void dpw_lab_close(dpw_lab* lab);

/* Last error message for this handle; empty string if none. The pointer is
 * valid until the next call on the same handle. */
const char* dpw_lab_error(const dpw_lab* lab);

/* Option overrides, applied before runs: "h" (semiclassical parameter),
 * "threads", "out" (output directory default). Value is parsed per key. */
int dpw_lab_set(dpw_lab* lab, const char* key, const char* value);

/* Run one subcommand (flow-check, trapped-set, splitting, cone-trace,
 * pressure, branches, wkb-dpw, grid-dpw, measure, compare), writing CSV/JSON
 * artifacts plus manifest.json under out_dir. */
int dpw_lab_run(dpw_lab* lab, const char* subcommand, const char* out_dir);

/* Pointwise probes through the same handle (x, xi are length-2 arrays). */
int dpw_lab_potential(const dpw_lab* lab, const double x[2], double* V,
                      double grad[2]);
int dpw_lab_flow(const dpw_lab* lab, const double state[4], double t,
                 double step, double out[4]);

#ifdef __cplusplus
}
#endif

#endif /* DPWLAB_H */
