#ifndef SGEIT_SURROGATE_H_
#define SGEIT_SURROGATE_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgeit/chaos.h"
#include "sgeit/parameters.h"
#include "sgeit/sgfem.h"

namespace sgeit {

inline constexpr char kSurrogateMagic[] = "SGFEM-EIT/1";

/// Polynomial electrode-voltage map y -> U(y) for every current pattern.
///
/// Coefficients refer to the chaos basis psi_mu(y) = prod_k sqrt(2) L_{mu_k}(y_k),
/// which is orthonormal for the uniform probability density on the hypercube
/// and has psi_0 = 1. This is the basis in which the Galerkin right-hand side
/// reduces to I_1 - I_{i+1} on the zero multi-index, so the solved beta are
/// used as they come out of the linear system.
class Surrogate {
 public:
  Surrogate() = default;
  Surrogate(ParameterModel parameters, MultiIndexSet indices,
            std::vector<Eigen::VectorXd> currents, std::vector<Eigen::VectorXd> beta);

  const ParameterModel& parameters() const { return parameters_; }
  const MultiIndexSet& indices() const { return indices_; }
  const std::vector<Eigen::VectorXd>& currents() const { return currents_; }
  const Eigen::VectorXd& beta(int pattern) const { return beta_[pattern]; }

  int num_electrodes() const { return parameters_.num_electrodes(); }
  int num_pixels() const { return parameters_.num_pixels(); }
  int dimension() const { return parameters_.dimension(); }
  int order() const { return indices_.order(); }
  int num_patterns() const { return static_cast<int>(currents_.size()); }
  /// M * (number of patterns).
  int stacked_size() const { return num_electrodes() * num_patterns(); }

  /// psi_mu(y) for every multi-index.
  Eigen::VectorXd basis_values(std::span<const double> y) const;

  /// Electrode voltages (mV) of one pattern (0-based index).
  Eigen::VectorXd voltage(int pattern, std::span<const double> y) const;
  /// All patterns concatenated in pattern order.
  Eigen::VectorXd stacked(std::span<const double> y) const;
  /// d stacked / d y, of size stacked_size() x dimension().
  Eigen::MatrixXd jacobian(std::span<const double> y) const;
  /// Stacked voltages and, optionally, the Jacobian from one table of
  /// univariate values.
  void evaluate(std::span<const double> y, Eigen::VectorXd& stacked,
                Eigen::MatrixXd* jacobian) const;

 private:
  void check_point(std::span<const double> y) const;
  // Expands per-basis-vector rows (pattern p, vector i) into electrode rows.
  void expand(const Eigen::VectorXd& w, Eigen::VectorXd& out) const;

  ParameterModel parameters_;
  MultiIndexSet indices_;
  std::vector<Eigen::VectorXd> currents_;
  std::vector<Eigen::VectorXd> beta_;
  Eigen::MatrixXd coefficients_;  // row p*(M-1)+i holds beta of pattern p, vector i
};

Surrogate make_surrogate(const SgfemSolution& solution, const MultiIndexSet& indices,
                         ParameterModel parameters);

std::string serialize_surrogate(const Surrogate& surrogate);
Surrogate deserialize_surrogate(const std::string& bytes);
void save_surrogate(const Surrogate& surrogate, const std::filesystem::path& path);
Surrogate load_surrogate(const std::filesystem::path& path);

}  // namespace sgeit

#endif  // SGEIT_SURROGATE_H_
