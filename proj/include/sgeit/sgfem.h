#ifndef SGEIT_SGFEM_H_
#define SGEIT_SGFEM_H_

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sgeit/chaos.h"
#include "sgeit/fem.h"

namespace sgeit {

/// Contact conductance intervals [a_m, b_m] in mS/cm. a_m == b_m is accepted
/// as a degenerate (deterministic) contact.
struct ContactBounds {
  std::vector<double> a;
  std::vector<double> b;

  int size() const { return static_cast<int>(a.size()); }
  static ContactBounds uniform(int num_electrodes, double a, double b);
};

void validate_contact_bounds(const ContactBounds& bounds);

/// Unknown ordering: interior coefficients alpha_{j,mu} first, row j * N_gamma + mu,
/// then voltage coefficients beta_{i,mu}, row N_D * N_gamma + i * N_gamma + mu,
/// where i = 0..M-2 stands for the basis vector e_1 - e_{i+2}.
struct SystemLayout {
  int num_nodes = 0;
  int num_electrodes = 0;
  int num_gamma = 0;

  Eigen::Index alpha_size() const { return Eigen::Index{num_nodes} * num_gamma; }
  Eigen::Index beta_size() const { return Eigen::Index{num_electrodes - 1} * num_gamma; }
  Eigen::Index total() const { return alpha_size() + beta_size(); }
  Eigen::Index alpha_row(int node, int mu) const { return Eigen::Index{node} * num_gamma + mu; }
  Eigen::Index beta_row(int i, int mu) const {
    return alpha_size() + Eigen::Index{i} * num_gamma + mu;
  }
};

struct SgfemSystem {
  SparseMatrix K;  // full symmetric pattern
  SystemLayout layout;
  ContactBounds bounds;
};

/// Contact conductance matrices Z_m = (a+b)/2 G_0 + (b-a)/2 G_{L+m}.
std::vector<SparseMatrix> contact_matrices(const MomentMatrices& moments, int num_pixels,
                                           const ContactBounds& bounds);

SgfemSystem assemble_system(const SpatialMatrices& spatial, const MomentMatrices& moments,
                            const ContactBounds& bounds);

/// Structural nonzero count of the assembled system computed from the block
/// patterns alone, without forming the Kronecker products.
std::size_t predicted_nnz(const SpatialMatrices& spatial, const MomentMatrices& moments);

/// Right-hand side for a mean-free current pattern (mA).
Eigen::VectorXd rhs_for_current(std::span<const double> current, const SystemLayout& layout);

/// The patterns e_1 - e_{m+1}, m = 1..M-1, in mA.
std::vector<Eigen::VectorXd> standard_patterns(int num_electrodes);

enum class SolverMode { automatic, direct, pcg };
enum class Preconditioner { jacobi, ilu0 };

struct SolverOptions {
  SolverMode mode = SolverMode::automatic;
  Preconditioner preconditioner = Preconditioner::jacobi;
  double tolerance = 1e-10;
  int max_iterations = 20000;
  Eigen::Index direct_threshold = 2'000'000;
};

struct PatternSolution {
  Eigen::VectorXd alpha;  // N_D * N_gamma, mV
  Eigen::VectorXd beta;   // (M-1) * N_gamma, mV
  double residual = 0.0;  // ||K x - c|| / ||c||
  int iterations = 0;     // 0 for direct solves
};

struct SgfemSolution {
  std::vector<Eigen::VectorXd> currents;
  std::vector<PatternSolution> patterns;
  bool used_direct = true;
};

SgfemSolution solve(const SgfemSystem& system, const std::vector<Eigen::VectorXd>& currents,
                    const SolverOptions& options = {});

}  // namespace sgeit

#endif  // SGEIT_SGFEM_H_
