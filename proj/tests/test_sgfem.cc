#include <numbers>

#include <doctest.h>

#include "sgeit/det_cem.h"
#include "sgeit/error.h"
#include "sgeit/parameters.h"
#include "sgeit/sgfem.h"
#include "sgeit/surrogate.h"

using namespace sgeit;

namespace {

struct Setup {
  Mesh mesh;
  PixelPartition partition;
  ParameterModel model;
  SpatialMatrices spatial;
  MultiIndexSet indices;
  MomentMatrices moments;
};

Setup make_setup(int rings, int sectors, int M, std::vector<Vec2> seeds, int Q, double a, double b) {
  Setup s;
  s.mesh = make_disk_fixture(rings, sectors, M, 0.5);
  s.partition = assign_pixels(s.mesh, seeds);
  s.model = ParameterModel::uniform(seeds, M, 1.1, 0.9, a, b);
  s.spatial = assemble_spatial(s.mesh, s.partition, s.model.sigma0, s.model.sigma);
  s.indices = iso_td(s.model.dimension(), Q);
  s.moments = moment_matrices(s.indices);
  return s;
}

std::vector<Vec2> twelve_seeds() {
  const std::vector<int> counts{3, 9};
  const std::vector<double> radii{0.35, 0.75};
  return ring_seeds(counts, radii);
}

Eigen::VectorXd chaos_mean_voltage(const Eigen::VectorXd& beta, int M, int ng) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(M);
  for (int i = 0; i < M - 1; ++i) {
    u[0] += beta[i * ng];
    u[i + 1] = -beta[i * ng];
  }
  return u;
}

}  // namespace

TEST_CASE("right-hand side of a current pattern") {
  const SystemLayout layout{5, 4, 3};
  const std::vector<double> I{1, -1, 0, 0};
  const Eigen::VectorXd c = rhs_for_current(I, layout);
  CHECK(c.size() == layout.total());
  CHECK(c[layout.beta_row(0, 0)] == 2.0);
  CHECK(c[layout.beta_row(1, 0)] == 1.0);
  CHECK(c[layout.beta_row(2, 0)] == 1.0);
  CHECK(c.sum() == 4.0);

  const std::vector<double> zero(4, 0.0);
  CHECK(rhs_for_current(zero, layout).norm() == 0.0);
  const std::vector<double> e1{1, 0, 0, 0};
  CHECK_THROWS_AS(rhs_for_current(e1, layout), InputError);
  const std::vector<double> short_pattern{1, -1};
  CHECK_THROWS_AS(rhs_for_current(short_pattern, layout), InputError);
}

TEST_CASE("contact bounds validation") {
  CHECK_NOTHROW(validate_contact_bounds(ContactBounds::uniform(3, 5.0, 5.0)));
  CHECK_THROWS_AS(validate_contact_bounds(ContactBounds::uniform(3, 5.0, 4.0)), InputError);
  CHECK_THROWS_AS(validate_contact_bounds(ContactBounds::uniform(3, 0.0, 4.0)), InputError);
}

TEST_CASE("assembled system is symmetric and matches the predicted pattern") {
  const Setup s = make_setup(4, 32, 8, twelve_seeds(), 1, 10.0, 1000.0);
  const auto sys = assemble_system(s.spatial, s.moments, ContactBounds::uniform(8, 10.0, 1000.0));
  CHECK(sys.layout.total() == Eigen::Index{s.mesh.num_nodes() + 7} * 21);
  const SparseMatrix Kt = sys.K.transpose();
  const SparseMatrix diff = sys.K - Kt;
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  CHECK(worst == 0.0);
  CHECK(static_cast<std::size_t>(sys.K.nonZeros()) == predicted_nnz(s.spatial, s.moments));
}

TEST_CASE("degree zero with fixed contacts equals the deterministic solve") {
  const Setup s = make_setup(4, 32, 8, twelve_seeds(), 0, 50.0, 50.0);
  const auto sys = assemble_system(s.spatial, s.moments, s.model.contact);
  const auto patterns = standard_patterns(8);
  const auto sol = solve(sys, patterns);
  const Surrogate sur = make_surrogate(sol, s.indices, s.model);
  const std::vector<double> y0(s.model.dimension(), 0.0);
  const auto sample = params_from_y(y0, s.model);
  for (int p = 0; p < 7; ++p) {
    const auto det = solve_deterministic(s.mesh, s.partition, sample,
                                         {patterns[p].data(), std::size_t(patterns[p].size())});
    const Eigen::VectorXd u = sur.voltage(p, y0);
    CHECK((u - det.voltages).norm() <= 1e-8 * det.voltages.norm());
  }
}

TEST_CASE("solves meet the residual tolerance with both solvers") {
  const Setup s = make_setup(3, 24, 6, twelve_seeds(), 1, 10.0, 1000.0);
  const auto sys = assemble_system(s.spatial, s.moments, s.model.contact);
  for (auto mode : {SolverMode::direct, SolverMode::pcg}) {
    SolverOptions opt;
    opt.mode = mode;
    opt.preconditioner = Preconditioner::ilu0;
    const auto sol = solve(sys, standard_patterns(6), opt);
    CHECK(sol.used_direct == (mode == SolverMode::direct));
    for (const auto& p : sol.patterns) CHECK(p.residual <= 1e-10);
  }
}

TEST_CASE("chaos-mean reciprocity") {
  const Setup s = make_setup(4, 32, 8, twelve_seeds(), 1, 10.0, 1000.0);
  const auto sys = assemble_system(s.spatial, s.moments, s.model.contact);
  const auto patterns = standard_patterns(8);
  const auto sol = solve(sys, patterns);
  const int ng = sys.layout.num_gamma;
  for (int a = 0; a < 7; ++a) {
    for (int b = 0; b < 7; ++b) {
      const double ab = patterns[a].dot(chaos_mean_voltage(sol.patterns[b].beta, 8, ng));
      const double ba = patterns[b].dot(chaos_mean_voltage(sol.patterns[a].beta, 8, ng));
      CHECK(std::abs(ab - ba) <= 1e-9 * std::max(1.0, std::abs(ab)));
    }
  }
}

TEST_CASE("mirror symmetry of a homogeneous disk") {
  const std::vector<Vec2> center{Vec2(0, 0)};
  const Setup s = make_setup(4, 32, 8, center, 2, 10.0, 1000.0);
  const auto sys = assemble_system(s.spatial, s.moments, s.model.contact);
  // e_1 - e_8 is odd under reflection about the x-axis.
  const auto patterns = standard_patterns(8);
  const auto sol = solve(sys, {patterns[6]});
  const Surrogate sur = make_surrogate(sol, s.indices, s.model);
  const std::vector<double> y0(s.model.dimension(), 0.0);
  const Eigen::VectorXd u = sur.voltage(0, y0);
  for (int k = 0; k < 8; ++k) CHECK(u[k] == doctest::Approx(-u[7 - k]).epsilon(1e-9));
}

TEST_CASE("paper-scale dimensions") {
  const Mesh mesh = make_disk_fixture(73, 128, 16, 0.5);
  REQUIRE(mesh.num_nodes() == 9345);
  const std::vector<int> counts{1, 6, 12, 18, 18, 21};
  const std::vector<double> radii{0.0, 0.2, 0.4, 0.6, 0.75, 0.9};
  const auto seeds = ring_seeds(counts, radii);
  REQUIRE(seeds.size() == 76);
  const auto partition = assign_pixels(mesh, seeds);
  const auto model = ParameterModel::uniform(seeds, 16, 1.1, 0.9, 10.0, 1000.0);
  const auto spatial = assemble_spatial(mesh, partition, model.sigma0, model.sigma);
  const auto indices = iso_td(92, 2);
  REQUIRE(indices.size() == 4371);
  const auto moments = moment_matrices(indices);
  const SystemLayout layout{mesh.num_nodes(), 16, 4371};
  const double total = static_cast<double>(layout.total());
  CHECK(total == doctest::Approx(4.1e7).epsilon(0.01));
  const double per_row = static_cast<double>(predicted_nnz(spatial, moments)) / total;
  MESSAGE("nonzeros per row: " << per_row);
  CHECK(per_row > 5.0);
  CHECK(per_row < 9.0);
}
