// Command-line driver; links the shared C API only.

#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "dpwlab.h"

int main(int argc, char** argv) {
  CLI::App app{"dpwlab: distorted plane waves over hyperbolic trapped sets"};
  app.set_version_flag("--version", dpw_version());

  std::string scenario, out = "out", subcommand;
  int threads = 0;
  double h = 0.0;
  bool verbose = false;

  const std::vector<std::string> subs = {
      "flow-check", "trapped-set", "splitting", "cone-trace", "pressure",
      "branches",   "wkb-dpw",     "grid-dpw",  "measure",    "compare"};
  for (const auto& name : subs) {
    auto* sc = app.add_subcommand(name);
    sc->add_option("--scenario", scenario, "scenario config file")->required();
    sc->add_option("--out", out, "output directory");
    sc->add_option("--threads", threads, "thread cap (0 = scenario value)");
    sc->add_option("--h", h, "override the semiclassical parameter");
    sc->add_flag("--verbose", verbose, "chatty progress output");
    sc->callback([&, name]() { subcommand = name; });
  }
  app.require_subcommand(1);
  CLI11_PARSE(app, argc, argv);

  // environment override honored for the output directory only
  if (const char* env = std::getenv("DPWLAB_OUT"); env && out == "out") out = env;

  dpw_lab* lab = nullptr;
  if (dpw_lab_open(scenario.c_str(), &lab) != 0 || lab == nullptr) {
    std::fprintf(stderr, "error: cannot load scenario %s\n", scenario.c_str());
    return 2;
  }
  if (h > 0.0) dpw_lab_set(lab, "h", std::to_string(h).c_str());
  if (threads > 0) dpw_lab_set(lab, "threads", std::to_string(threads).c_str());

  if (verbose)
    std::fprintf(stderr, "running %s -> %s\n", subcommand.c_str(), out.c_str());
  const int rc = dpw_lab_run(lab, subcommand.c_str(), out.c_str());
  if (rc != 0)
    std::fprintf(stderr, "%s (exit %d)\n", dpw_lab_error(lab), rc);
  else if (verbose)
    std::fprintf(stderr, "done\n");
  dpw_lab_close(lab);
  return rc;
}
