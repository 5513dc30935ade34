#ifndef SGEIT_CLI_H_
#define SGEIT_CLI_H_

#include <cstddef>
#include <ostream>

#include "sgeit/geometry.h"
#include "sgeit/parameters.h"
#include "sgeit/sgfem.h"
#include "sgeit/surrogate.h"

namespace sgeit {

struct PrecomputeStats {
  int num_nodes = 0;
  std::size_t num_gamma = 0;
  Eigen::Index total = 0;
  std::size_t nnz = 0;
  std::size_t predicted_nnz = 0;
  double assemble_seconds = 0.0;
  double solve_seconds = 0.0;
  double max_residual = 0.0;
  bool used_direct = true;
};

/// Off-line phase: assemble the stochastic Galerkin system for every
/// standard current pattern, solve it, and wrap the voltage coefficients.
Surrogate build_surrogate(const Mesh& mesh, const PixelPartition& partition,
                          const ParameterModel& model, int order, const SolverOptions& options,
                          PrecomputeStats* stats = nullptr);

/// Runs the command line; returns the process exit code
/// (0 success, 2 usage or input error, 3 numerical failure).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sgeit

#endif  // SGEIT_CLI_H_
