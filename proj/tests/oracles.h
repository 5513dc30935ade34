// Independent reference computations for the tests. Nothing here calls into
// the library's numerical code.
#ifndef SGEIT_TESTS_ORACLES_H_
#define SGEIT_TESTS_ORACLES_H_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

// Classical Legendre P_n(x) and P_n'(x) by Bonnet's recurrence.
inline std::pair<double, double> legendre_p(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

struct Rule {
  std::vector<double> x, w;
};

// n-point Gauss-Legendre rule on [-1, 1] by Newton iteration from Chebyshev guesses.
inline Rule gauss_legendre(int n) {
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre_p(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto [p, dp] = legendre_p(n, x);
    r.x[i] = x;
    r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

// Orthonormal Legendre polynomial sqrt((2n+1)/2) P_n.
inline double orthonormal(int n, double x) {
  return std::sqrt((2.0 * n + 1.0) / 2.0) * legendre_p(n, x).first;
}

// Exact binomial via Pascal's triangle.
inline std::uint64_t binomial(int n, int k) {
  std::vector<std::uint64_t> row(k + 1, 0);
  row[0] = 1;
  for (int i = 1; i <= n; ++i)
    for (int j = std::min(i, k); j >= 1; --j) row[j] += row[j - 1];
  return row[k];
}

// Radical inverse in base b: the Halton sequence component.
inline double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

inline const std::vector<int>& primes() {
  static const std::vector<int> p{2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
                                  53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113};
  return p;
}

// Point i (1-based) of a Halton sequence scaled into [-1, 1]^dim.
inline std::vector<double> halton_point(int i, int dim) {
  std::vector<double> y(dim);
  for (int k = 0; k < dim; ++k) y[k] = 2.0 * halton(i, primes()[k]) - 1.0;
  return y;
}

}  // namespace oracle

#endif  // SGEIT_TESTS_ORACLES_H_
