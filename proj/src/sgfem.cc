#include "sgeit/sgfem.h"

#include <cmath>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "sgeit/error.h"
#include "sgeit/ilu0.h"

namespace sgeit {

namespace {

using Triplet = Eigen::Triplet<double>;

// Appends the entries of (A kron G) to the interior block.
void add_kronecker(std::vector<Triplet>& out, const SparseMatrix& spatial,
                   const SparseMatrix& stochastic, int n_gamma) {
  for (int col = 0; col < spatial.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator a(spatial, col); a; ++a) {
      const Eigen::Index row_base = a.row() * n_gamma, col_base = a.col() * n_gamma;
      for (int gc = 0; gc < stochastic.outerSize(); ++gc)
        for (SparseMatrix::InnerIterator g(stochastic, gc); g; ++g)
          out.emplace_back(row_base + g.row(), col_base + g.col(), a.value() * g.value());
    }
  }
}

// Appends scale * Z as the block at (row_base, col_base); also its transpose
// when `mirror` is set.
void add_block(std::vector<Triplet>& out, Eigen::Index row_base, Eigen::Index col_base,
               const SparseMatrix& z, double scale, bool mirror) {
  for (int gc = 0; gc < z.outerSize(); ++gc) {
    for (SparseMatrix::InnerIterator g(z, gc); g; ++g) {
      const double v = scale * g.value();
      out.emplace_back(row_base + g.row(), col_base + g.col(), v);
      if (mirror) out.emplace_back(col_base + g.col(), row_base + g.row(), v);
    }
  }
}

SparseMatrix pattern_of(const SparseMatrix& m) {
  SparseMatrix p = m;
  for (int k = 0; k < p.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(p, k); it; ++it) it.valueRef() = 1.0;
  return p;
}

double relative_residual(const SparseMatrix& K, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& c) {
  const double norm_c = c.norm();
  const double r = (K * x - c).norm();
  return norm_c > 0.0 ? r / norm_c : r;
}

}  // namespace

ContactBounds ContactBounds::uniform(int num_electrodes, double a, double b) {
  return {std::vector<double>(num_electrodes, a), std::vector<double>(num_electrodes, b)};
}

void validate_contact_bounds(const ContactBounds& bounds) {
  if (bounds.a.size() != bounds.b.size())
    throw InputError("contact bounds a and b differ in length");
  for (int m = 0; m < bounds.size(); ++m) {
    if (!(bounds.a[m] > 0.0) || !(bounds.a[m] <= bounds.b[m]) || !std::isfinite(bounds.b[m]))
      throw InputError("electrode " + std::to_string(m + 1) +
                       ": contact bounds must satisfy 0 < a_m <= b_m");
  }
}

std::vector<SparseMatrix> contact_matrices(const MomentMatrices& moments, int num_pixels,
                                           const ContactBounds& bounds) {
  std::vector<SparseMatrix> z;
  z.reserve(bounds.size());
  for (int m = 0; m < bounds.size(); ++m) {
    const double mid = 0.5 * (bounds.a[m] + bounds.b[m]);
    const double half = 0.5 * (bounds.b[m] - bounds.a[m]);
    z.push_back(mid * moments.G[0] + half * moments.G[num_pixels + m + 1]);
  }
  return z;
}

SgfemSystem assemble_system(const SpatialMatrices& spatial, const MomentMatrices& moments,
                            const ContactBounds& bounds) {
  validate_contact_bounds(bounds);
  const int L = spatial.num_pixels();
  const int M = spatial.num_electrodes();
  if (M < 2) throw InputError("the electrode model needs at least two electrodes");
  if (bounds.size() != M) throw InputError("expected one contact interval per electrode");
  if (moments.dimension() != L + M)
    throw InputError("stochastic dimension " + std::to_string(moments.dimension()) +
                     " differs from pixels + electrodes = " + std::to_string(L + M));

  SgfemSystem system;
  system.bounds = bounds;
  system.layout = {spatial.num_nodes(), M, moments.size()};
  const auto& layout = system.layout;
  const int ng = layout.num_gamma;
  const auto Z = contact_matrices(moments, L, bounds);

  std::size_t estimate = static_cast<std::size_t>(spatial.A0.nonZeros()) * ng;
  for (int l = 0; l < L; ++l)
    estimate += static_cast<std::size_t>(spatial.A[l].nonZeros()) * moments.G[l + 1].nonZeros();
  for (int m = 0; m < M; ++m)
    estimate += static_cast<std::size_t>(spatial.S[m].nonZeros()) * Z[m].nonZeros();
  std::vector<Triplet> triplets;
  triplets.reserve(estimate + estimate / 8);

  // Delta = A_0 kron G_0 + sum_l A_l kron G_l + sum_m S_m kron Z_m
  add_kronecker(triplets, spatial.A0, moments.G[0], ng);
  for (int l = 0; l < L; ++l) add_kronecker(triplets, spatial.A[l], moments.G[l + 1], ng);
  for (int m = 0; m < M; ++m) add_kronecker(triplets, spatial.S[m], Z[m], ng);

  // Upsilon_{j,i'} = g_{i'+1}(j) Z_{i'+1} - g_1(j) Z_1 (1-based electrodes)
  for (int j = 0; j < layout.num_nodes; ++j) {
    const double g_first = spatial.g[0][j];
    for (int i = 0; i < M - 1; ++i) {
      const double g_other = spatial.g[i + 1][j];
      if (g_other != 0.0)
        add_block(triplets, layout.alpha_row(j, 0), layout.beta_row(i, 0), Z[i + 1], g_other,
                  true);
      if (g_first != 0.0)
        add_block(triplets, layout.alpha_row(j, 0), layout.beta_row(i, 0), Z[0], -g_first, true);
    }
  }

  // Pi_{i,i'} = |E_1| Z_1 + delta_{i,i'} |E_{i+1}| Z_{i+1}
  for (int i = 0; i < M - 1; ++i) {
    for (int k = 0; k < M - 1; ++k) {
      add_block(triplets, layout.beta_row(i, 0), layout.beta_row(k, 0), Z[0], spatial.lengths[0],
                false);
    }
    add_block(triplets, layout.beta_row(i, 0), layout.beta_row(i, 0), Z[i + 1],
              spatial.lengths[i + 1], false);
  }

  system.K.resize(layout.total(), layout.total());
  system.K.setFromTriplets(triplets.begin(), triplets.end());
  system.K.makeCompressed();
  return system;
}

std::size_t predicted_nnz(const SpatialMatrices& spatial, const MomentMatrices& moments) {
  const int L = spatial.num_pixels();
  const int M = spatial.num_electrodes();
  const std::size_t ng = static_cast<std::size_t>(moments.size());
  auto nnz = [](const SparseMatrix& m) { return static_cast<std::size_t>(m.nonZeros()); };
  const std::size_t contact_first = nnz(moments.G[L + 1]);

  // Interior block: stochastic diagonal on the union of A_0 and S_m patterns;
  // the G_k patterns are mutually disjoint and avoid the diagonal.
  SparseMatrix diagonal_pattern = pattern_of(spatial.A0);
  for (const auto& s : spatial.S) diagonal_pattern += pattern_of(s);
  std::size_t count = nnz(diagonal_pattern) * ng;
  for (int l = 0; l < L; ++l) count += nnz(spatial.A[l]) * nnz(moments.G[l + 1]);
  for (int m = 0; m < M; ++m) count += nnz(spatial.S[m]) * nnz(moments.G[L + m + 1]);

  std::size_t coupling = 0;
  for (int j = 0; j < spatial.num_nodes(); ++j) {
    const bool on_first = spatial.g[0][j] != 0.0;
    for (int i = 0; i < M - 1; ++i) {
      const bool on_other = spatial.g[i + 1][j] != 0.0;
      if (!on_first && !on_other) continue;
      coupling += ng;
      if (on_other) coupling += nnz(moments.G[L + i + 2]);
      if (on_first) coupling += contact_first;
    }
  }
  count += 2 * coupling;

  for (int i = 0; i < M - 1; ++i)
    count += (M - 1) * (ng + contact_first) + nnz(moments.G[L + i + 2]);
  return count;
}

Eigen::VectorXd rhs_for_current(std::span<const double> current, const SystemLayout& layout) {
  if (static_cast<int>(current.size()) != layout.num_electrodes)
    throw InputError("current pattern length differs from the electrode count");
  double sum = 0.0, scale = 0.0;
  for (double c : current) {
    sum += c;
    scale = std::max(scale, std::abs(c));
  }
  if (std::abs(sum) > 1e-12 * std::max(1.0, scale))
    throw InputError("current pattern is not mean-free (sum = " + std::to_string(sum) + ")");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(layout.total());
  for (int i = 0; i < layout.num_electrodes - 1; ++i)
    c[layout.beta_row(i, 0)] = current[0] - current[i + 1];
  return c;
}

std::vector<Eigen::VectorXd> standard_patterns(int num_electrodes) {
  std::vector<Eigen::VectorXd> patterns;
  for (int m = 1; m < num_electrodes; ++m) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(num_electrodes);
    p[0] = 1.0;
    p[m] = -1.0;
    patterns.push_back(std::move(p));
  }
  return patterns;
}

namespace {

template <typename Solver>
SgfemSolution solve_iterative(const SgfemSystem& system,
                              const std::vector<Eigen::VectorXd>& currents,
                              const SolverOptions& options) {
  Solver cg;
  cg.setTolerance(options.tolerance);
  cg.setMaxIterations(options.max_iterations);
  cg.compute(system.K);
  if (cg.info() != Eigen::Success)
    throw NumericalError("preconditioner setup failed; check the parameter bounds");
  SgfemSolution out;
  out.used_direct = false;
  for (const auto& current : currents) {
    const Eigen::VectorXd c = rhs_for_current({current.data(), static_cast<std::size_t>(current.size())}, system.layout);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(c.size());
    if (c.norm() > 0.0) x = cg.solve(c);
    PatternSolution p;
    p.residual = relative_residual(system.K, x, c);
    p.iterations = static_cast<int>(cg.iterations());
    if (!(p.residual <= options.tolerance))
      throw NumericalError("conjugate gradients did not reach tolerance " +
                           std::to_string(options.tolerance) + " within " +
                           std::to_string(options.max_iterations) + " iterations (residual " +
                           std::to_string(p.residual) + ")");
    p.alpha = x.head(system.layout.alpha_size());
    p.beta = x.tail(system.layout.beta_size());
    out.currents.push_back(current);
    out.patterns.push_back(std::move(p));
  }
  return out;
}

}  // namespace

SgfemSolution solve(const SgfemSystem& system, const std::vector<Eigen::VectorXd>& currents,
                    const SolverOptions& options) {
  if (currents.empty()) throw InputError("at least one current pattern is required");
  const bool direct =
      options.mode == SolverMode::direct ||
      (options.mode == SolverMode::automatic && system.layout.total() <= options.direct_threshold);
  if (!direct) {
    using Jacobi = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                                            Eigen::DiagonalPreconditioner<double>>;
    using Ilu = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Ilu0>;
    if (options.preconditioner == Preconditioner::ilu0)
      return solve_iterative<Ilu>(system, currents, options);
    return solve_iterative<Jacobi>(system, currents, options);
  }

  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt(system.K);
  if (llt.info() != Eigen::Success)
    throw NumericalError("Cholesky factorization failed: the system is not positive definite, "
                         "which signals invalid conductivity or contact bounds");
  SgfemSolution out;
  for (const auto& current : currents) {
    const Eigen::VectorXd c = rhs_for_current({current.data(), static_cast<std::size_t>(current.size())}, system.layout);
    Eigen::VectorXd x = llt.solve(c);
    double residual = relative_residual(system.K, x, c);
    // Iterative refinement recovers the last digits on stiff contacts.
    for (int step = 0; step < 3 && residual > 0.1 * options.tolerance; ++step) {
      x += llt.solve(c - system.K * x);
      residual = relative_residual(system.K, x, c);
    }
    if (!(residual <= options.tolerance))
      throw NumericalError("direct solve residual " + std::to_string(residual) +
                           " exceeds tolerance " + std::to_string(options.tolerance));
    PatternSolution p;
    p.residual = residual;
    p.alpha = x.head(system.layout.alpha_size());
    p.beta = x.tail(system.layout.beta_size());
    out.currents.push_back(current);
    out.patterns.push_back(std::move(p));
  }
  return out;
}

}  // namespace sgeit
