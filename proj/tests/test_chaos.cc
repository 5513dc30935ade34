#include <random>

#include <doctest.h>

#include "oracles.h"
#include "sgeit/chaos.h"
#include "sgeit/error.h"

using namespace sgeit;

namespace {

// Integral over [-1, 1] of y^power L_a L_b for the Lebesgue-orthonormal family.
double moment_1d(int power, int a, int b) {
  const auto rule = oracle::gauss_legendre(32);
  double s = 0.0;
  for (std::size_t q = 0; q < rule.x.size(); ++q)
    s += rule.w[q] * std::pow(rule.x[q], power) * oracle::orthonormal(a, rule.x[q]) *
         oracle::orthonormal(b, rule.x[q]);
  return s;
}

// Tensor-product oracle of (G_k)_{mu,nu} for the probability-orthonormal basis.
double moment_oracle(int k, const std::vector<int>& mu, const std::vector<int>& nu) {
  double v = 1.0;
  for (std::size_t d = 0; d < mu.size(); ++d)
    v *= moment_1d(static_cast<int>(d) + 1 == k ? 1 : 0, mu[d], nu[d]);
  return v;
}

}  // namespace

TEST_CASE("Legendre values") {
  const auto v = legendre_eval(1, 0.5);
  CHECK(v.values[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(v.values[1] == doctest::Approx(0.6123724356957945).epsilon(1e-15));
  const auto w = legendre_eval(12, -0.37);
  for (int n = 0; n <= 12; ++n) CHECK(w.values[n] == doctest::Approx(oracle::orthonormal(n, -0.37)).epsilon(1e-13));
  CHECK_THROWS_AS(legendre_eval(-1, 0.0), InputError);
}

TEST_CASE("Legendre orthonormality by quadrature") {
  const auto rule = oracle::gauss_legendre(32);
  for (int k = 0; k <= 10; ++k) {
    for (int l = 0; l <= 10; ++l) {
      double s = 0.0;
      for (std::size_t q = 0; q < rule.x.size(); ++q) {
        const auto v = legendre_eval(10, rule.x[q]);
        s += rule.w[q] * v.values[k] * v.values[l];
      }
      CHECK(std::abs(s - (k == l ? 1.0 : 0.0)) < 1e-12);
    }
  }
}

TEST_CASE("Legendre derivatives match finite differences") {
  const double h = 1e-6;
  for (double y : {-0.9, -0.2, 0.0, 0.45, 0.8}) {
    const auto v = legendre_eval(8, y);
    const auto p = legendre_eval(8, y + h);
    const auto m = legendre_eval(8, y - h);
    for (int n = 0; n <= 8; ++n) {
      const double fd = (p.values[n] - m.values[n]) / (2 * h);
      CHECK(v.derivatives[n] == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("coupling constant is the integral of y L_m L_{m+1}") {
  for (int m = 0; m < 10; ++m) CHECK(legendre_coupling(m) == doctest::Approx(moment_1d(1, m, m + 1)).epsilon(1e-13));
  CHECK(legendre_coupling(0) == doctest::Approx(1.0 / std::sqrt(3.0)));
}

TEST_CASE("index set ordering and lookup") {
  const auto s = iso_td(2, 1);
  REQUIRE(s.size() == 3);
  CHECK(s.index(0) == std::vector<int>{0, 0});
  CHECK(s.index(1) == std::vector<int>{1, 0});
  CHECK(s.index(2) == std::vector<int>{0, 1});

  const auto t = iso_td(3, 2);
  CHECK(t.index(4) == std::vector<int>{2, 0, 0});
  CHECK(t.index(5) == std::vector<int>{1, 1, 0});
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(t.find(t.terms(i)) == i);
    CHECK(t.total_degree(i) <= 2);
    if (i > 0) CHECK(t.total_degree(i) >= t.total_degree(i - 1));
  }
  CHECK(t.raise(0, 2) == 3);
  CHECK(!t.raise(4, 0).has_value());

  const auto zero = iso_td(7, 0);
  CHECK(zero.size() == 1);
  CHECK(zero.index(0) == std::vector<int>(7, 0));
}

TEST_CASE("cardinality") {
  CHECK(iso_td(92, 2).size() == 4371);
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> P(1, 50), Q(0, 4);
  for (int i = 0; i < 20; ++i) {
    const int p = P(rng), q = Q(rng);
    CHECK(iso_td(p, q).size() == oracle::binomial(p + q, q));
  }
  CHECK(binomial_capped(100, 50, 1000) == std::nullopt);
  CHECK_THROWS_AS(iso_td(200, 6, 1000), InputError);
}

TEST_CASE("explicit index sets must be canonical") {
  CHECK_NOTHROW(MultiIndexSet(2, 1, {{0, 0}, {1, 0}, {0, 1}}));
  CHECK_THROWS_AS(MultiIndexSet(2, 1, {{0, 0}, {0, 1}, {1, 0}}), InputError);
  CHECK_THROWS_AS(MultiIndexSet(2, 1, {{0, 0}, {1, 0}}), InputError);
}

TEST_CASE("moment matrices against the quadrature oracle") {
  const auto set = iso_td(3, 3);
  const auto mm = moment_matrices(set);
  REQUIRE(mm.dimension() == 3);
  const int n = static_cast<int>(set.size());
  for (int k = 0; k <= 3; ++k) {
    const Eigen::MatrixXd G(mm.G[k]);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const auto mu = set.index(i), nu = set.index(j);
        CHECK(std::abs(G(i, j) - moment_oracle(k, mu, nu)) < 1e-12);
        // Structural pattern: differ by one in component k, equal elsewhere.
        bool pair = k > 0;
        for (int d = 0; d < 3 && pair; ++d)
          pair = d + 1 == k ? std::abs(mu[d] - nu[d]) == 1 : mu[d] == nu[d];
        bool stored = false;
        for (SparseMatrix::InnerIterator it(mm.G[k], j); it; ++it) stored = stored || it.row() == i;
        if (k > 0) CHECK(stored == pair);
      }
    }
  }
  const Eigen::MatrixXd G0(mm.G[0]);
  CHECK((G0 - Eigen::MatrixXd::Identity(n, n)).norm() == 0.0);
}

TEST_CASE("single coupling entry") {
  const auto mm = moment_matrices(iso_td(1, 1));
  CHECK(Eigen::MatrixXd(mm.G[1])(0, 1) == doctest::Approx(0.5773502691896258).epsilon(1e-15));
}

TEST_CASE("moment matrix nonzeros follow the raise/lower count") {
  // Each index with mu_k < Q and |mu| < Q has one neighbor above in dimension k,
  // so nnz(G_k) is twice the number of indices of degree < Q.
  for (auto [P, Q] : {std::pair{4, 2}, std::pair{6, 3}, std::pair{10, 1}}) {
    const auto mm = moment_matrices(iso_td(P, Q));
    const auto below = oracle::binomial(P + Q - 1, Q - 1);
    for (int k = 1; k <= P; ++k) CHECK(static_cast<std::uint64_t>(mm.G[k].nonZeros()) == 2 * below);
  }
}
