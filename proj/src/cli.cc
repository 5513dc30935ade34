#include "sgeit/cli.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgeit/det_cem.h"
#include "sgeit/error.h"
#include "sgeit/fem.h"
#include "sgeit/inversion.h"
#include "sgeit/render.h"

namespace sgeit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Bounds {
  double sigma0 = 1.1;
  double dsigma = 0.9;
  double zeta_min = 10.0;
  double zeta_max = 1000.0;
};

struct PrecomputeArgs {
  std::string mesh, seeds, out;
  Bounds bounds;
  int order = 2;
  std::string solver = "auto";
  std::string preconditioner = "jacobi";
  double tol = 1e-10;
  bool dry_run = false;
};

struct SimulateArgs {
  std::string mesh, seeds, phantom, out;
  std::optional<double> noise_pct, noise_std;
  std::uint64_t seed = 1;
};

struct ReconstructArgs {
  std::string surrogate, data, out;
  double noise_pct = 1.0;
  std::optional<double> noise_std;
  double corr_length = 5.0;
  double eta_factor = 10.0;
  std::size_t samples = 0;
  std::size_t burn_in = 50000;
  std::size_t thin = 5;
  double proposal_std = 0.07;
  std::uint64_t seed = 1;
};

struct RenderArgs {
  std::string mesh, seeds, estimates, field = "sigma_map", out;
};

struct FixtureArgs {
  int rings = 8, sectors = 64, electrodes = 8;
  double coverage = 0.5;
  std::vector<int> seed_counts{3, 9};
  std::vector<double> seed_radii{0.35, 0.75};
  std::string mesh_out, seeds_out;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  f << text;
  if (!f) throw InputError("failed writing " + path);
}

void check_bounds(const Bounds& b) {
  if (!(b.sigma0 > 0.0)) throw InputError("--sigma0 must be positive");
  if (!(b.dsigma >= 0.0 && b.dsigma < b.sigma0))
    throw InputError("--dsigma must satisfy 0 <= dsigma < sigma0");
  if (!(b.zeta_min > 0.0 && b.zeta_min <= b.zeta_max))
    throw InputError("contact bounds must satisfy 0 < zeta-min <= zeta-max");
}

int cmd_precompute(const PrecomputeArgs& a, std::ostream& out) {
  check_bounds(a.bounds);
  if (a.order < 0) throw InputError("--order must be non-negative");
  if (!(a.tol > 0.0)) throw InputError("--tol must be positive");
  const Mesh mesh = load_mesh(a.mesh);
  const auto seeds = load_seeds(a.seeds);
  const PixelPartition partition = assign_pixels(mesh, seeds);
  const ParameterModel model = ParameterModel::uniform(seeds, mesh.num_electrodes(), a.bounds.sigma0,
                                                       a.bounds.dsigma, a.bounds.zeta_min,
                                                       a.bounds.zeta_max);
  out << "N_D = " << mesh.num_nodes() << ", L = " << model.num_pixels()
      << ", M = " << model.num_electrodes() << ", Q = " << a.order << "\n";

  if (a.dry_run) {
    const auto t0 = Clock::now();
    const MultiIndexSet indices = iso_td(model.dimension(), a.order);
    const SpatialMatrices spatial = assemble_spatial(mesh, partition, model.sigma0, model.sigma);
    const MomentMatrices moments = moment_matrices(indices);
    const std::size_t nnz = predicted_nnz(spatial, moments);
    const SystemLayout layout{mesh.num_nodes(), model.num_electrodes(), static_cast<int>(indices.size())};
    out << "N_gamma = " << indices.size() << "\n"
        << "N_tot = " << layout.total() << "\n"
        << "predicted nnz = " << nnz << " (" << static_cast<double>(nnz) / layout.total()
        << " per row)\n"
        << "dry run, no system assembled (" << seconds_since(t0) << " s)\n";
    return 0;
  }
  if (a.out.empty()) throw InputError("--out is required unless --dry-run is given");

  SolverOptions options;
  options.tolerance = a.tol;
  options.mode = a.solver == "direct" ? SolverMode::direct
               : a.solver == "pcg"    ? SolverMode::pcg
                                      : SolverMode::automatic;
  options.preconditioner = a.preconditioner == "ilu0" ? Preconditioner::ilu0 : Preconditioner::jacobi;
  PrecomputeStats stats;
  const Surrogate surrogate = build_surrogate(mesh, partition, model, a.order, options, &stats);
  save_surrogate(surrogate, a.out);
  out << "N_gamma = " << stats.num_gamma << "\n"
      << "N_tot = " << stats.total << "\n"
      << "nnz = " << stats.nnz << " (predicted " << stats.predicted_nnz << ")\n"
      << "solver = " << (stats.used_direct ? "direct" : "pcg")
      << ", max residual = " << stats.max_residual << "\n"
      << "assembly " << stats.assemble_seconds << " s, solve " << stats.solve_seconds << " s\n"
      << "wrote " << a.out << "\n";
  return 0;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.noise_pct && a.noise_std) throw InputError("give at most one of --noise-pct and --noise-std");
  NoiseSpec noise;
  if (a.noise_pct) {
    noise.use_percent = true;
    noise.percent = *a.noise_pct;
  } else if (a.noise_std) {
    noise.std_mv = *a.noise_std;
  }
  if (noise.percent < 0.0 || noise.std_mv < 0.0) throw InputError("noise level must be non-negative");
  const Mesh mesh = load_mesh(a.mesh);
  const int M = mesh.num_electrodes();
  const Phantom phantom = load_phantom(a.phantom, M);
  std::optional<PixelPartition> partition;
  if (!a.seeds.empty()) partition = assign_pixels(mesh, load_seeds(a.seeds));
  else if (!phantom.pixel_sigma.empty()) throw InputError("phantom pixel values need --seeds");
  const auto sigma = phantom.triangle_conductivity(mesh, partition ? &*partition : nullptr);
  // The forward model only needs a partition for pixelwise input; a single
  // pixel stands in otherwise.
  const PixelPartition model_partition =
      partition ? *partition : assign_pixels(mesh, std::vector<Vec2>{Vec2::Zero()});
  const CemForwardModel model(mesh, model_partition);
  MeasurementSet m = simulate_measurements(model, sigma, phantom.zeta, standard_patterns(M), noise, a.seed);
  m.note = "mesh " + std::filesystem::path(a.mesh).filename().string() + " (" +
           std::to_string(mesh.num_nodes()) + " nodes), seed " + std::to_string(a.seed);
  save_measurements(m, a.out);
  out << "simulated " << m.patterns.size() << " patterns on " << mesh.num_nodes()
      << " nodes, noise_std = " << m.noise_std << " mV\nwrote " << a.out << "\n";
  return 0;
}

int cmd_reconstruct(const ReconstructArgs& a, std::ostream& out, std::ostream& err) {
  if (!(a.corr_length > 0.0)) throw InputError("--corr-length must be positive");
  if (!(a.eta_factor > 0.0)) throw InputError("--eta-factor must be positive");
  if (a.samples > 0 && !(a.proposal_std > 0.0)) throw InputError("--proposal-std must be positive");
  if (a.thin == 0) throw InputError("--thin must be at least 1");
  const Surrogate surrogate = load_surrogate(a.surrogate);
  const MeasurementSet data = load_measurements(a.data);
  const Eigen::VectorXd v = data_for_surrogate(surrogate, data);
  const NoiseModel noise =
      a.noise_std ? NoiseModel::explicit_level(*a.noise_std) : NoiseModel::percent_of_range(v, a.noise_pct);
  const double eta = a.eta_factor * noise.xi;
  SmoothnessPrior prior = build_prior_cov(surrogate.parameters().seeds, a.corr_length, eta);
  const ParameterModel model = surrogate.parameters();
  const Posterior posterior(surrogate, v, noise, std::move(prior));
  out << "xi = " << noise.xi << " mV, eta = " << eta << "\n";

  const auto t0 = Clock::now();
  const MapResult map = map_estimate(posterior);
  out << "MAP: F = " << map.objective << " after " << map.iterations << " iterations ("
      << seconds_since(t0) << " s)" << (map.converged ? "" : ", not converged") << "\n";
  Estimates est = map_estimates(map, model);
  if (a.samples > 0) {
    McmcConfig config;
    config.n_samples = a.samples;
    config.burn_in = a.burn_in;
    config.thinning = a.thin;
    config.proposal_std = a.proposal_std;
    config.seed = a.seed;
    const auto t1 = Clock::now();
    const Chain chain = mcmc_sample(posterior, config, {est.y_map.data(), std::size_t(est.y_map.size())});
    cm_sd_estimates(chain, model, est);
    out << "MCMC: " << chain.size() << " samples, acceptance " << chain.acceptance
        << ", stabilization " << est.stabilization << " (" << seconds_since(t1) << " s)\n";
  }
  for (const auto& w : est.warnings) err << "warning: " << w << "\n";
  save_estimates(est, a.out);
  out << "wrote " << a.out << "\n";
  return 0;
}

int cmd_render(const RenderArgs& a, std::ostream& out) {
  const Estimates est = load_estimates(a.estimates);
  const auto values = select_field(est, a.field);
  const Mesh mesh = load_mesh(a.mesh);
  const PixelPartition partition = assign_pixels(mesh, load_seeds(a.seeds));
  write_text(a.out, render_svg(mesh, partition, values, a.field));
  out << "wrote " << a.out << "\n";
  return 0;
}

int cmd_fixture(const FixtureArgs& a, std::ostream& out) {
  const Mesh mesh = make_disk_fixture(a.rings, a.sectors, a.electrodes, a.coverage);
  save_mesh(mesh, a.mesh_out);
  out << "wrote " << a.mesh_out << " (" << mesh.num_nodes() << " nodes, " << mesh.num_triangles()
      << " triangles)\n";
  if (!a.seeds_out.empty()) {
    const auto seeds = ring_seeds(a.seed_counts, a.seed_radii);
    assign_pixels(mesh, seeds);  // every seed must own a triangle
    write_text(a.seeds_out, seeds_to_json(seeds).dump() + "\n");
    out << "wrote " << a.seeds_out << " (" << seeds.size() << " seeds)\n";
  }
  return 0;
}

}  // namespace

Surrogate build_surrogate(const Mesh& mesh, const PixelPartition& partition,
                          const ParameterModel& model, int order, const SolverOptions& options,
                          PrecomputeStats* stats) {
  model.validate();
  const auto t0 = Clock::now();
  const MultiIndexSet indices = iso_td(model.dimension(), order);
  const SpatialMatrices spatial = assemble_spatial(mesh, partition, model.sigma0, model.sigma);
  const MomentMatrices moments = moment_matrices(indices);
  const SgfemSystem system = assemble_system(spatial, moments, model.contact);
  const double assemble_seconds = seconds_since(t0);
  const auto t1 = Clock::now();
  const SgfemSolution solution = solve(system, standard_patterns(model.num_electrodes()), options);
  if (stats) {
    stats->num_nodes = mesh.num_nodes();
    stats->num_gamma = indices.size();
    stats->total = system.layout.total();
    stats->nnz = static_cast<std::size_t>(system.K.nonZeros());
    stats->predicted_nnz = predicted_nnz(spatial, moments);
    stats->assemble_seconds = assemble_seconds;
    stats->solve_seconds = seconds_since(t1);
    stats->used_direct = solution.used_direct;
    stats->max_residual = 0.0;
    for (const auto& p : solution.patterns) stats->max_residual = std::max(stats->max_residual, p.residual);
  }
  return make_surrogate(solution, indices, model);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic Galerkin surrogates and Bayesian reconstruction for electrical impedance tomography"};
  app.require_subcommand(1);

  PrecomputeArgs pre;
  auto* precompute = app.add_subcommand("precompute", "Assemble and solve the sGFEM system, write a surrogate");
  precompute->add_option("--mesh", pre.mesh, "Mesh JSON (cm)")->required()->check(CLI::ExistingFile);
  precompute->add_option("--seeds", pre.seeds, "Pixel seed JSON (cm)")->required()->check(CLI::ExistingFile);
  precompute->add_option("--order", pre.order, "Total polynomial degree Q")->capture_default_str();
  precompute->add_option("--sigma0", pre.bounds.sigma0, "Background conductivity (mS)")->capture_default_str();
  precompute->add_option("--dsigma", pre.bounds.dsigma, "Pixel half-range sigma_l (mS)")->capture_default_str();
  precompute->add_option("--zeta-min", pre.bounds.zeta_min, "Lower contact conductance a (mS/cm)")->capture_default_str();
  precompute->add_option("--zeta-max", pre.bounds.zeta_max, "Upper contact conductance b (mS/cm)")->capture_default_str();
  precompute->add_option("--solver", pre.solver, "Linear solver")
      ->check(CLI::IsMember({"auto", "direct", "pcg"}))->capture_default_str();
  precompute->add_option("--precond", pre.preconditioner, "PCG preconditioner")
      ->check(CLI::IsMember({"jacobi", "ilu0"}))->capture_default_str();
  precompute->add_option("--tol", pre.tol, "Relative residual tolerance")->capture_default_str();
  precompute->add_flag("--dry-run", pre.dry_run, "Report system dimensions without assembling");
  precompute->add_option("--out", pre.out, "Surrogate output file");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic measurements from a phantom");
  simulate->add_option("--mesh", sim.mesh, "Mesh JSON, ideally finer than the inversion mesh")
      ->required()->check(CLI::ExistingFile);
  simulate->add_option("--seeds", sim.seeds, "Pixel seeds, needed for pixelwise phantoms")->check(CLI::ExistingFile);
  simulate->add_option("--phantom", sim.phantom, "Phantom JSON")->required()->check(CLI::ExistingFile);
  auto* sim_pct = simulate->add_option("--noise-pct", sim.noise_pct, "Noise std as percent of the voltage range");
  simulate->add_option("--noise-std", sim.noise_std, "Noise std (mV)")->excludes(sim_pct);
  simulate->add_option("--seed", sim.seed, "Noise seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Measurement JSON output")->required();

  ReconstructArgs rec;
  auto* reconstruct = app.add_subcommand("reconstruct", "MAP, and optionally CM/SD, estimates");
  reconstruct->add_option("--surrogate", rec.surrogate, "Surrogate file")->required()->check(CLI::ExistingFile);
  reconstruct->add_option("--data", rec.data, "Measurement JSON")->required()->check(CLI::ExistingFile);
  auto* rec_pct = reconstruct->add_option("--noise-pct", rec.noise_pct, "Likelihood xi as percent of the data range")
                      ->capture_default_str();
  reconstruct->add_option("--noise-std", rec.noise_std, "Likelihood xi (mV)")->excludes(rec_pct);
  reconstruct->add_option("--corr-length", rec.corr_length, "Prior correlation length s (cm)")->capture_default_str();
  reconstruct->add_option("--eta-factor", rec.eta_factor, "Prior std eta as a multiple of xi")->capture_default_str();
  reconstruct->add_option("--samples", rec.samples, "Retained MCMC samples; 0 gives MAP only")->capture_default_str();
  reconstruct->add_option("--burn-in", rec.burn_in, "Discarded initial MCMC steps")->capture_default_str();
  reconstruct->add_option("--thin", rec.thin, "Keep every n-th MCMC state")->capture_default_str();
  reconstruct->add_option("--proposal-std", rec.proposal_std, "Random-walk step std (y-units)")->capture_default_str();
  reconstruct->add_option("--seed", rec.seed, "MCMC seed")->capture_default_str();
  reconstruct->add_option("--out", rec.out, "Estimates JSON output")->required();

  RenderArgs ren;
  auto* render = app.add_subcommand("render", "Draw a pixel field as SVG");
  render->add_option("--mesh", ren.mesh, "Mesh JSON")->required()->check(CLI::ExistingFile);
  render->add_option("--seeds", ren.seeds, "Pixel seed JSON")->required()->check(CLI::ExistingFile);
  render->add_option("--estimates", ren.estimates, "Estimates JSON")->required()->check(CLI::ExistingFile);
  render->add_option("--field", ren.field, "sigma_map, sigma_cm or sigma_sd")->capture_default_str();
  render->add_option("--out", ren.out, "SVG output")->required();

  FixtureArgs fix;
  auto* fixture = app.add_subcommand("fixture", "Write the unit-disk test mesh and ring seeds");
  fixture->add_option("--rings", fix.rings, "Node rings")->capture_default_str();
  fixture->add_option("--sectors", fix.sectors, "Nodes per ring")->capture_default_str();
  fixture->add_option("--electrodes", fix.electrodes, "Electrode count M")->capture_default_str();
  fixture->add_option("--coverage", fix.coverage, "Electrode fraction of each boundary arc")->capture_default_str();
  fixture->add_option("--seed-counts", fix.seed_counts, "Seeds per ring")->delimiter(',')->capture_default_str();
  fixture->add_option("--seed-radii", fix.seed_radii, "Seed ring radii (cm)")->delimiter(',')->capture_default_str();
  fixture->add_option("--out", fix.mesh_out, "Mesh JSON output")->required();
  fixture->add_option("--seeds-out", fix.seeds_out, "Seed JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*precompute) return cmd_precompute(pre, out);
    if (*simulate) return cmd_simulate(sim, out);
    if (*reconstruct) return cmd_reconstruct(rec, out, err);
    if (*render) return cmd_render(ren, out);
    if (*fixture) return cmd_fixture(fix, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::bad_alloc&) {
    err << "error: out of memory; reduce --order or the mesh size\n";
    return 3;
  }
  return 2;
}

}  // namespace sgeit
