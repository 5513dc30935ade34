#include <Eigen/Dense>
#include <doctest.h>

#include "sgeit/det_cem.h"
#include "sgeit/error.h"

using namespace sgeit;

namespace {

// Dense CEM solve written from the weak form: unknowns (u, U, lambda) with
// lambda enforcing sum(U) = 0.
Eigen::VectorXd dense_cem(const Mesh& mesh, const std::vector<double>& tri_sigma,
                          const std::vector<double>& zeta, const Eigen::VectorXd& I) {
  const int n = mesh.num_nodes(), M = static_cast<int>(zeta.size());
  const int N = n + M + 1;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N, N);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    Eigen::Matrix3d P;
    for (int k = 0; k < 3; ++k) P.row(k) << 1.0, mesh.nodes[tri[k]].x(), mesh.nodes[tri[k]].y();
    const Eigen::Matrix3d C = P.inverse();  // columns: coefficients of each hat function
    const double area = 0.5 * std::abs(P.determinant());
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        K(tri[a], tri[b]) += tri_sigma[t] * area * C.block<2, 1>(1, a).dot(C.block<2, 1>(1, b));
  }
  for (const auto& e : mesh.boundary_edges) {
    if (!e.electrode) continue;
    const int m = *e.electrode - 1;
    const int i = e.nodes[0], j = e.nodes[1];
    const double len = (mesh.nodes[j] - mesh.nodes[i]).norm();
    const double z = zeta[m];
    K(i, i) += z * len / 3;
    K(j, j) += z * len / 3;
    K(i, j) += z * len / 6;
    K(j, i) += z * len / 6;
    for (int k : {i, j}) {
      K(k, n + m) -= z * len / 2;
      K(n + m, k) -= z * len / 2;
    }
    K(n + m, n + m) += z * len;
  }
  for (int m = 0; m < M; ++m) K(n + m, n + M) = K(n + M, n + m) = 1.0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
  rhs.segment(n, M) = I;
  const Eigen::VectorXd x = K.fullPivLu().solve(rhs);
  return x.segment(n, M);
}

struct Fixture {
  Mesh mesh = make_disk_fixture(3, 24, 6, 0.5);
  PixelPartition partition;
  Fixture() {
    const std::vector<int> counts{1, 4};
    const std::vector<double> radii{0.0, 0.6};
    partition = assign_pixels(mesh, ring_seeds(counts, radii));
  }
};

}  // namespace

TEST_CASE("forward model agrees with a dense weak-form solve") {
  const Fixture f;
  const CemForwardModel model(f.mesh, f.partition);
  const std::vector<double> pixels{0.4, 1.0, 1.7, 1.2, 0.8};
  const std::vector<double> zeta{20, 100, 300, 50, 900, 15};
  const auto tri = model.triangle_conductivity(pixels);
  const auto patterns = standard_patterns(6);
  const auto sols = model.solve(tri, zeta, patterns);
  for (std::size_t p = 0; p < patterns.size(); ++p) {
    const Eigen::VectorXd ref = dense_cem(f.mesh, tri, zeta, patterns[p]);
    CHECK((sols[p].voltages - ref).norm() <= 1e-10 * ref.norm());
    CHECK(sols[p].residual <= 1e-12);
    CHECK(std::abs(sols[p].voltages.sum()) <= 1e-12 * ref.norm());
  }
}

TEST_CASE("reciprocity") {
  const Fixture f;
  const CemForwardModel model(f.mesh, f.partition);
  DeterministicSample s{{0.4, 1.0, 1.7, 1.2, 0.8}, {20, 100, 300, 50, 900, 15}};
  const auto patterns = standard_patterns(6);
  const auto sols = model.solve(s, patterns);
  for (std::size_t a = 0; a < patterns.size(); ++a)
    for (std::size_t b = 0; b < patterns.size(); ++b)
      CHECK(patterns[a].dot(sols[b].voltages) ==
            doctest::Approx(patterns[b].dot(sols[a].voltages)).epsilon(1e-11));
}

TEST_CASE("two electrodes give antisymmetric voltages") {
  const Mesh mesh = make_disk_fixture(3, 16, 2, 0.5);
  const Vec2 seed(0, 0);
  const auto part = assign_pixels(mesh, std::span<const Vec2>(&seed, 1));
  const DeterministicSample s{{1.1}, {100, 100}};
  const std::vector<double> I{1.0, -1.0};
  const auto sol = solve_deterministic(mesh, part, s, I);
  CHECK(sol.voltages[0] == doctest::Approx(-sol.voltages[1]).epsilon(1e-12));
  CHECK(sol.voltages[0] > 0.0);
}

TEST_CASE("linear scaling") {
  const Fixture f;
  const CemForwardModel model(f.mesh, f.partition);
  const DeterministicSample s{{0.4, 1.0, 1.7, 1.2, 0.8}, {20, 100, 300, 50, 900, 15}};
  DeterministicSample c = s;
  for (auto& v : c.pixel_sigma) v *= 3.0;
  for (auto& v : c.zeta) v *= 3.0;
  const Eigen::VectorXd I = standard_patterns(6)[2];
  const auto base = model.solve(s, {I})[0].voltages;
  // Voltage is linear in the current and inversely proportional to a common scale.
  CHECK((model.solve(s, {Eigen::VectorXd(2.5 * I)})[0].voltages - 2.5 * base).norm() <= 1e-12 * base.norm());
  CHECK((model.solve(c, {I})[0].voltages - base / 3.0).norm() <= 1e-12 * base.norm());
}

TEST_CASE("dissipated power decreases as conductivity grows") {
  const Fixture f;
  const CemForwardModel model(f.mesh, f.partition);
  const Eigen::VectorXd I = standard_patterns(6)[0];
  double last = std::numeric_limits<double>::infinity();
  for (double sigma : {0.2, 0.5, 1.0, 2.0}) {
    const DeterministicSample s{std::vector<double>(5, sigma), std::vector<double>(6, 100.0)};
    const double power = I.dot(model.solve(s, {I})[0].voltages);
    CHECK(power > 0.0);
    CHECK(power < last);
    last = power;
  }
}

TEST_CASE("parameter map") {
  const auto model = ParameterModel::uniform({Vec2(0, 0), Vec2(0.5, 0)}, 3, 1.1, 0.9, 10.0, 1000.0);
  const std::vector<double> y{-1.0, 1.0, 1.0, -1.0, 0.0};
  const auto s = params_from_y(y, model);
  CHECK(s.pixel_sigma[0] == doctest::Approx(0.2));
  CHECK(s.pixel_sigma[1] == doctest::Approx(2.0));
  CHECK(s.zeta[0] == doctest::Approx(1000.0));
  CHECK(s.zeta[1] == doctest::Approx(10.0));
  CHECK(s.zeta[2] == doctest::Approx(505.0));
  CHECK_THROWS_AS(params_from_y(std::vector<double>{0.0}, model), InputError);
}

TEST_CASE("simulated measurements") {
  const Fixture f;
  const CemForwardModel model(f.mesh, f.partition);
  Phantom ph;
  ph.inclusions.push_back({Vec2(0.3, 0.2), 0.3, 0.25});
  ph.zeta.assign(6, 100.0);
  const auto tri = ph.triangle_conductivity(f.mesh, nullptr);
  const auto patterns = standard_patterns(6);
  const auto clean = model.solve(tri, ph.zeta, patterns);

  SUBCASE("zero noise reproduces the solver output") {
    const auto m = simulate_measurements(model, tri, ph.zeta, patterns, NoiseSpec{}, 4);
    for (std::size_t p = 0; p < patterns.size(); ++p) CHECK((m.voltages[p] - clean[p].voltages).norm() == 0.0);
    CHECK(m.noise_std == 0.0);
  }
  SUBCASE("percent rule records the computed level") {
    NoiseSpec spec;
    spec.percent = 1.0;
    spec.use_percent = true;
    const auto m = simulate_measurements(model, tri, ph.zeta, patterns, spec, 4);
    Eigen::VectorXd st(6 * patterns.size());
    for (std::size_t p = 0; p < patterns.size(); ++p) st.segment(6 * p, 6) = clean[p].voltages;
    CHECK(m.noise_std == doctest::Approx(0.01 * (st.maxCoeff() - st.minCoeff())).epsilon(1e-14));
    Eigen::VectorXd range(2);
    range << -40.0, 60.0;
    CHECK(percent_noise_level(range, 1.0) == doctest::Approx(1.0));
  }
  SUBCASE("same seed, same bytes") {
    NoiseSpec spec;
    spec.std_mv = 0.01;
    const auto a = measurements_to_json(simulate_measurements(model, tri, ph.zeta, patterns, spec, 9)).dump();
    const auto b = measurements_to_json(simulate_measurements(model, tri, ph.zeta, patterns, spec, 9)).dump();
    const auto c = measurements_to_json(simulate_measurements(model, tri, ph.zeta, patterns, spec, 10)).dump();
    CHECK(a == b);
    CHECK(a != c);
  }
  SUBCASE("JSON round trip") {
    NoiseSpec spec;
    spec.std_mv = 0.01;
    const auto m = simulate_measurements(model, tri, ph.zeta, patterns, spec, 9);
    const auto back = measurements_from_json(measurements_to_json(m));
    CHECK(measurements_to_json(back).dump() == measurements_to_json(m).dump());
  }
  SUBCASE("non mean-free patterns are rejected on load") {
    auto j = measurements_to_json(simulate_measurements(model, tri, ph.zeta, patterns, NoiseSpec{}, 1));
    j["patterns"][0][0] = 2.0;
    CHECK_THROWS_AS(measurements_from_json(j), InputError);
  }
}

TEST_CASE("phantom painting and parsing") {
  const Fixture f;
  const auto ph = phantom_from_json(nlohmann::json::parse(
      R"({"background": 1.1, "inclusions": [{"center": [0.5, 0.0], "radius": 0.3, "sigma": 0.25}], "zeta": 100})"),
      6);
  CHECK(ph.zeta == std::vector<double>(6, 100.0));
  const auto tri = ph.triangle_conductivity(f.mesh, nullptr);
  for (int t = 0; t < f.mesh.num_triangles(); ++t) {
    const bool inside = (f.mesh.centroid(t) - Vec2(0.5, 0.0)).norm() < 0.3;
    CHECK(tri[t] == (inside ? 0.25 : 1.1));
  }
  CHECK_THROWS_AS(phantom_from_json(nlohmann::json::parse(R"({"zeta": [1, 2]})"), 6), InputError);
  CHECK_THROWS_AS(phantom_from_json(nlohmann::json::parse(R"({"zeta": -1})"), 6), InputError);
}
