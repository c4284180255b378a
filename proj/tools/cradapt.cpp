// cradapt: command line front end for the adaptive CR eigenvalue toolkit.
//
//   cradapt adapt --domain square_ring --theta 0.5 --nev 10 --marking cluster --out runs/ring
//   cradapt reference --domain square_ring:8 --levels 4
//   cradapt mesh-info --domain file:my.mesh
//
// Settings come from defaults, then --config, then explicit flags.

#include "cradapt/bench.hpp"
#include "cradapt/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> domain, marking, out, target, indicator, weights, sweep;
  std::optional<double> theta, reference, tol;
  std::optional<int> nev, levels;
  std::optional<std::size_t> max_dof;
  std::optional<std::uint64_t> seed;
  bool timing = false;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "configuration file ([run]/[adapt]/[solver]/... sections)");
  app->add_option("--domain", f.domain, "unit_square:<n> | square_ring[:<k>] | file:<path>");
  app->add_option("--nev", f.nev, "number of eigenpairs");
  app->add_option("--seed", f.seed, "eigensolver start-block seed");
  app->add_option("--tol", f.tol, "eigensolver relative residual tolerance");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--reference", f.reference, "reference eigenvalue for the target cluster");
  app->add_option("--weights", f.weights, "vertex averaging: uniform | area");
}

void add_adaptive(CLI::App* app, Flags& f) {
  app->add_option("--theta", f.theta, "Doerfler bulk parameter in (0,1)");
  app->add_option("--max-dof", f.max_dof, "stop once the CR space reaches this size");
  app->add_option("--marking", f.marking, "single:<k> | cluster");
  app->add_option("--target", f.target, "<k> or <k>:<multiplicity>, 1-based");
  app->add_option("--indicator", f.indicator, "mu_eta | mu");
  app->add_flag("--timing", f.timing, "record wall-clock seconds per iteration");
}

cradapt::bench::RunConfig assemble(cradapt::bench::Mode mode, const Flags& f) {
  using cradapt::bench::apply_setting;
  cradapt::bench::RunConfig cfg;
  if (!f.config.empty()) cfg = cradapt::bench::load_config(f.config, cfg);
  cfg.mode = mode;
  auto set = [&](const char* section, const char* key, const std::string& v) { apply_setting(cfg, section, key, v); };
  if (f.domain) set("run", "domain", *f.domain);
  if (f.nev) set("run", "nev", std::to_string(*f.nev));
  if (f.seed) set("run", "seed", std::to_string(*f.seed));
  if (f.out) set("run", "out", *f.out);
  if (f.weights) set("run", "weights", *f.weights);
  if (f.reference) cfg.reference = *f.reference;
  if (f.tol) cfg.adapt.solver.tol = *f.tol;
  if (f.theta) cfg.adapt.theta = *f.theta;
  if (f.max_dof) cfg.adapt.max_dof = *f.max_dof;
  if (f.marking) set("adapt", "marking", *f.marking);
  if (f.target) set("adapt", "target", *f.target);
  if (f.indicator) set("adapt", "indicator", *f.indicator);
  if (f.timing) cfg.adapt.timing = true;
  if (f.sweep) set("audit", "sweep", *f.sweep);
  if (f.levels) {
    cfg.reference_levels = *f.levels;
    cfg.audit_levels = *f.levels;
  }
  return cfg;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Crouzeix-Raviart eigenvalue toolkit"};
  app.require_subcommand(1);
  Flags f;

  auto* solve = app.add_subcommand("solve", "CR and P1 eigenvalues on one mesh");
  add_common(solve, f);
  auto* adapt = app.add_subcommand("adapt", "adaptive loop with mu/eta indicators");
  add_common(adapt, f);
  add_adaptive(adapt, f);
  auto* audit = app.add_subcommand("audit", "check the computable bound chain per iteration");
  add_common(audit, f);
  add_adaptive(audit, f);
  audit->add_option("--sweep", f.sweep, "adaptive | uniform");
  audit->add_option("--levels", f.levels, "uniform sweep length");
  auto* ref = app.add_subcommand("reference", "Aitken-extrapolated conforming reference eigenvalues");
  add_common(ref, f);
  ref->add_option("--levels", f.levels, "number of uniform levels (>= 3)");
  auto* info = app.add_subcommand("mesh-info", "mesh statistics and consistency audit");
  add_common(info, f);

  CLI11_PARSE(app, argc, argv);

  using cradapt::bench::Mode;
  Mode mode = solve->parsed()   ? Mode::Solve
              : adapt->parsed() ? Mode::Adapt
              : audit->parsed() ? Mode::Audit
              : ref->parsed()   ? Mode::Reference
                                : Mode::MeshInfo;
  cradapt::bench::RunConfig cfg;
  try {
    cfg = assemble(mode, f);
  } catch (const cradapt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
  return cradapt::bench::run(cfg, std::cout);
}
