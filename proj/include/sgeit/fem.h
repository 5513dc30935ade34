#ifndef SGEIT_FEM_H_
#define SGEIT_FEM_H_

#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "sgeit/geometry.h"

namespace sgeit {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Gradient-gradient integrals of the three linear basis functions of a
/// triangle, for unit conductivity.
Eigen::Matrix3d element_stiffness(const Vec2& a, const Vec2& b, const Vec2& c);

/// Stiffness matrix for a piecewise-constant conductivity given per triangle.
SparseMatrix conductivity_stiffness(const Mesh& mesh, std::span<const double> triangle_sigma);

/// Background stiffness A0 (scaled by sigma0) and the pixel-restricted
/// stiffness matrices A_l (scaled by sigma_l). Only triangles of pixel l
/// contribute to A_l, so its pattern is the node adjacency of that pixel.
struct StiffnessMatrices {
  SparseMatrix background;
  std::vector<SparseMatrix> pixel;
};

StiffnessMatrices assemble_stiffness(const Mesh& mesh, const PixelPartition& partition,
                                     double sigma0, std::span<const double> sigma_l);

/// Boundary mass matrices S_m and load vectors g_m of the electrodes.
struct ElectrodeMatrices {
  std::vector<SparseMatrix> mass;
  std::vector<Eigen::VectorXd> load;
};

ElectrodeMatrices assemble_electrode_mass(const Mesh& mesh, const ElectrodeGeometry& electrodes);

/// Everything the stochastic Galerkin system needs from the spatial side.
struct SpatialMatrices {
  SparseMatrix A0;
  std::vector<SparseMatrix> A;
  std::vector<SparseMatrix> S;
  std::vector<Eigen::VectorXd> g;
  std::vector<double> lengths;

  int num_nodes() const { return static_cast<int>(A0.rows()); }
  int num_pixels() const { return static_cast<int>(A.size()); }
  int num_electrodes() const { return static_cast<int>(S.size()); }
};

SpatialMatrices assemble_spatial(const Mesh& mesh, const PixelPartition& partition,
                                 double sigma0, std::span<const double> sigma_l);

}  // namespace sgeit

#endif  // SGEIT_FEM_H_
