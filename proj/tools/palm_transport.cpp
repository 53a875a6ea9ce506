// palm-transport: stable constrained transport densities between measures,
// with verification, generalized Voronoi diagnostics, and shift-coupling
// experiments on stationary instances.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "palm/io.hpp"
#include "palm/instances.hpp"
#include "palm/parallel.hpp"
#include "palm/voronoi.hpp"

namespace fs = std::filesystem;
using namespace palm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitSpecError = 2;
constexpr int kExitNotConverged = 3;

struct CommonFlags {
  double tol = 1e-6;
  double solver_tol = 0.0;
  std::size_t max_stages = 0;
  std::string constraint = "";
  std::string out_dir = "";
  bool plot = false;
  bool strict = false;
  std::uint64_t seed = 1;
};

InstanceSpec load_with_overrides(const std::string& path, const CommonFlags& flags) {
  InstanceSpec spec = load_instance_file(path);
  if (flags.solver_tol > 0.0) spec.solver.convergence_tol = flags.solver_tol;
  if (flags.max_stages > 0) spec.solver.max_stages = flags.max_stages;
  if (!flags.constraint.empty()) {
    if (flags.constraint == "density")
      spec.solver.constraint_mode = ConstraintMode::density_cap;
    else if (flags.constraint == "counting")
      spec.solver.constraint_mode = ConstraintMode::counting_cap;
    else
      throw SpecError("--constraint must be 'density' or 'counting'");
  }
  if (!flags.out_dir.empty()) spec.output.out_dir = flags.out_dir;
  if (flags.plot) spec.output.plot = true;
  return spec;
}

int cmd_solve(const std::string& spec_path, const CommonFlags& flags) {
  InstanceSpec spec = load_with_overrides(spec_path, flags);
  auto phi = build_measure(spec.geometry, spec.phi_spec);
  auto psi = build_measure(spec.geometry, spec.psi_spec);
  auto table = PairTable::build(std::move(phi), std::move(psi));
  auto result = solve_site_optimal(table, spec.solver);

  fs::create_directories(spec.output.out_dir);
  const auto dir = fs::path(spec.output.out_dir);
  write_density_csv((dir / "density.csv").string(), result.density, &result,
                    spec.output.density_threshold);
  write_text_file((dir / "summary.json").string(), summary_json(result).dump(2) + "\n");
  write_atoms_csv((dir / "phi_atoms.csv").string(), result.density.table->phi());
  write_atoms_csv((dir / "psi_atoms.csv").string(), result.density.table->psi());
  if (spec.output.plot) {
    if (spec.geometry.dimension == 1)
      write_text_file((dir / "density.svg").string(),
                      density_support_svg(result.density));
    else if (spec.geometry.dimension == 2)
      write_text_file((dir / "assignment.svg").string(),
                      assignment_map_svg(result.density));
  }
  std::cout << "solved: stages=" << result.stages_run << " residual=" << result.residual
            << " converged=" << (result.converged ? "yes" : "no") << "\n"
            << "wrote " << (dir / "density.csv").string() << ", "
            << (dir / "summary.json").string() << "\n";
  if (!result.converged && flags.strict) return kExitNotConverged;
  return kExitOk;
}

int cmd_verify(const std::string& spec_path, const std::string& density_path,
               const CommonFlags& flags) {
  InstanceSpec spec = load_with_overrides(spec_path, flags);
  auto phi = build_measure(spec.geometry, spec.phi_spec);
  auto psi = build_measure(spec.geometry, spec.psi_spec);
  const double phi_mass = phi.total_mass(), psi_mass = psi.total_mass();
  auto table = PairTable::build(std::move(phi), std::move(psi));
  auto f = read_density_csv(density_path, table);

  nlohmann::json report;
  bool pass = true;

  auto validation = validate_constrained(f);
  report["constrained"] = validation_json(validation);
  pass &= validation.ok();
  std::cout << (validation.ok() ? "[pass]" : "[FAIL]") << " constrained: "
            << validation.violation_count << " violations\n";

  auto stab = check_stable(f, 1e-9);
  report["stability"] = stability_json(stab);
  pass &= stab.stable();
  std::cout << (stab.stable() ? "[pass]" : "[FAIL]") << " stable: "
            << stab.unstable_count << " unstable pairs\n";

  auto bal = check_balanced(f);
  report["balance"] = balance_json(bal);
  // balance is a pass requirement only where it is expected to hold: torus
  // geometry with matching total masses
  const bool expect_balance = spec.geometry.is_torus() &&
                              std::fabs(phi_mass - psi_mass) <=
                                  flags.tol * (1.0 + std::fabs(phi_mass));
  report["balance"]["expected"] = expect_balance;
  if (expect_balance) {
    const bool ok = bal.balanced(flags.tol);
    pass &= ok;
    std::cout << (ok ? "[pass]" : "[FAIL]") << " balanced: row "
              << bal.max_row_deviation << ", col " << bal.max_col_deviation << "\n";
  } else {
    std::cout << "[info] balance (not required): row " << bal.max_row_deviation
              << ", col " << bal.max_col_deviation << "\n";
  }

  const double inf = std::numeric_limits<double>::infinity();
  double worst_rel = 0.0;
  for (double t : {0.25, 0.5, 1.0, 2.0, inf}) {
    auto [a, b] = mass_transport_identity(f, t);
    const double rel = std::fabs(a - b) / (1.0 + std::max(std::fabs(a), std::fabs(b)));
    worst_rel = std::max(worst_rel, rel);
  }
  report["mass_transport_identity_rel_error"] = worst_rel;
  pass &= worst_rel <= 1e-9;
  std::cout << (worst_rel <= 1e-9 ? "[pass]" : "[FAIL]")
            << " mass transport identity: rel error " << worst_rel << "\n";

  if (!flags.out_dir.empty()) {
    fs::create_directories(flags.out_dir);
    write_text_file((fs::path(flags.out_dir) / "verify.json").string(),
                    report.dump(2) + "\n");
    if (!stab.stable())
      write_unstable_pairs_csv((fs::path(flags.out_dir) / "unstable_pairs.csv").string(),
                               stab);
  }
  std::cout << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitOk : kExitVerifyFailed;
}

int cmd_voronoi(const std::string& spec_path, const CommonFlags& flags,
                std::size_t rays) {
  InstanceSpec spec = load_with_overrides(spec_path, flags);
  auto psi = build_measure(spec.geometry, spec.psi_spec);
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t j = 0; j < psi.size(); ++j) {
    auto diag = territory_diagnostics(psi, j, rays);
    cells.push_back({{"center", j},
                     {"star_shaped", diag.star_shaped},
                     {"bounded", diag.bounded},
                     {"max_extent", diag.max_extent},
                     {"rays", diag.rays}});
  }
  fs::create_directories(spec.output.out_dir);
  const auto dir = fs::path(spec.output.out_dir);
  write_text_file((dir / "voronoi.json").string(),
                  nlohmann::json{{"cells", cells}}.dump(2) + "\n");
  if (spec.output.plot && spec.geometry.dimension == 2)
    write_text_file((dir / "territories.svg").string(), territories_svg(psi));
  std::cout << "wrote " << (dir / "voronoi.json").string() << " (" << psi.size()
            << " centers)\n";
  return kExitOk;
}

int cmd_couple(const std::string& spec_path, const CommonFlags& flags,
               std::size_t samples, const std::vector<double>& radii) {
  InstanceSpec spec = load_with_overrides(spec_path, flags);
  if (!spec.geometry.is_torus())
    throw SpecError("couple requires a torus geometry");
  for (double L : spec.geometry.period)
    if (std::fabs(L - spec.geometry.period[0]) > 1e-12)
      throw SpecError("couple requires a square torus");
  if (spec.psi_spec.value("type", "") != std::string("poisson"))
    throw SpecError("couple requires psi of type 'poisson'");
  if (spec.phi_spec.value("type", "") != std::string("grid_lebesgue"))
    throw SpecError("couple requires phi of type 'grid_lebesgue'");

  SlivnyakOptions opts;
  opts.intensity = spec.psi_spec.at("intensity").get<double>();
  opts.period = spec.geometry.period[0];
  opts.dimension = spec.geometry.dimension;
  const auto& r = spec.phi_spec.at("resolution");
  opts.grid_resolution = r.is_array() ? r[0].get<std::size_t>() : r.get<std::size_t>();
  opts.samples = samples;
  opts.seed = flags.seed;
  if (!radii.empty()) opts.radii = radii;
  opts.solve = spec.solver;
  if (spec.solver.convergence_tol == 1e-12) opts.solve.convergence_tol = 1e-10;
  opts.solve.max_stages = std::max(spec.solver.max_stages, std::size_t{500000});

  auto stats = slivnyak_experiment(opts);
  fs::create_directories(spec.output.out_dir);
  const auto dir = fs::path(spec.output.out_dir);
  write_text_file((dir / "palm_statistics.json").string(),
                  palm_statistics_json(stats).dump(2) + "\n");
  std::ostringstream csv;
  csv << "radius,mean_count,std_error\n";
  csv.precision(12);
  for (std::size_t k = 0; k < stats.radii.size(); ++k)
    csv << stats.radii[k] << ',' << stats.mean_count[k] << ',' << stats.std_error[k]
        << '\n';
  write_text_file((dir / "palm_statistics.csv").string(), csv.str());
  std::cout << "samples kept: " << stats.samples << ", dropped: " << stats.dropped
            << "\n";
  for (std::size_t k = 0; k < stats.radii.size(); ++k)
    std::cout << "r=" << stats.radii[k] << ": mean " << stats.mean_count[k] << " +- "
              << stats.std_error[k] << "\n";
  const double drop_rate =
      stats.samples + stats.dropped == 0
          ? 0.0
          : static_cast<double>(stats.dropped) /
                static_cast<double>(stats.samples + stats.dropped);
  if (drop_rate >= 0.01) {
    std::cout << "FAIL: dropped sample rate " << drop_rate << " >= 1%\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_example(const std::string& name, const ExampleParams& params) {
  auto outcome = run_example(name, params);
  for (const auto& c : outcome.checks)
    std::cout << "  [" << (c.pass ? "ok" : "FAIL") << "] " << c.label << ": "
              << c.detail << "\n";
  std::cout << (outcome.pass ? "PASS" : "FAIL") << ": " << outcome.name << " ("
            << outcome.seconds << " s)\n";
  return outcome.pass ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stable constrained transport between measures"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string spec_path, density_path, example_name;
  std::size_t samples = 500;
  std::size_t rays = 0;
  std::vector<double> radii;
  ExampleParams example_params;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--tol", flags.tol, "verification tolerance");
    cmd->add_option("--solver-tol", flags.solver_tol, "solver convergence tolerance");
    cmd->add_option("--max-stages", flags.max_stages, "stage cap");
    cmd->add_option("--constraint", flags.constraint, "density|counting");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_flag("--plot", flags.plot, "emit SVG plots");
    cmd->add_flag("--strict", flags.strict, "non-convergence is an error");
    cmd->add_option("--seed", flags.seed, "master seed");
  };

  auto* solve = app.add_subcommand("solve", "compute the site-optimal density");
  solve->add_option("spec", spec_path, "instance JSON")->required();
  add_common(solve);

  auto* verify = app.add_subcommand("verify", "check a density against its instance");
  verify->add_option("spec", spec_path, "instance JSON")->required();
  verify->add_option("density", density_path, "density CSV")->required();
  add_common(verify);

  auto* voronoi = app.add_subcommand("voronoi", "territory diagnostics for psi");
  voronoi->add_option("spec", spec_path, "instance JSON")->required();
  voronoi->add_option("--rays", rays, "rays per center");
  add_common(voronoi);

  auto* couple = app.add_subcommand("couple", "extra-head sampling experiment");
  couple->add_option("spec", spec_path, "instance JSON")->required();
  couple->add_option("--samples", samples, "sample count");
  couple->add_option("--radii", radii, "count radii")->delimiter(',');
  add_common(couple);

  auto* example = app.add_subcommand("example", "run a named reference instance");
  example->add_option("name", example_name, "one of: interval z-line z-cross-r "
                                            "square-kernel z-plus-r half-lines")
      ->required();
  example->add_option("--alpha", example_params.alpha, "interval length");
  example->add_option("--resolution", example_params.resolution, "cells per axis");
  example->add_option("--period", example_params.period, "torus period");
  example->add_option("--tol", example_params.tol, "solver tolerance");

  auto* version = app.add_subcommand("version", "print version");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(spec_path, flags);
    if (verify->parsed()) return cmd_verify(spec_path, density_path, flags);
    if (voronoi->parsed()) return cmd_voronoi(spec_path, flags, rays);
    if (couple->parsed()) return cmd_couple(spec_path, flags, samples, radii);
    if (example->parsed()) return cmd_example(example_name, example_params);
    if (version->parsed()) {
      std::cout << "palm-transport 1.0.0\n";
      return kExitOk;
    }
  } catch (const SpecError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kExitSpecError;
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return kExitSpecError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSpecError;
  }
  return kExitOk;
}
