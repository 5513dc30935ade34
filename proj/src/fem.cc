#include "sgeit/fem.h"

#include <string>

#include "sgeit/error.h"

namespace sgeit {

namespace {

using Triplet = Eigen::Triplet<double>;

void add_element(std::vector<Triplet>& triplets, const Mesh& mesh, int t, double scale) {
  const auto& tri = mesh.triangles[t];
  const Eigen::Matrix3d k =
      element_stiffness(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) triplets.emplace_back(tri[a], tri[b], scale * k(a, b));
}

SparseMatrix from_triplets(int n, const std::vector<Triplet>& triplets) {
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

}  // namespace

Eigen::Matrix3d element_stiffness(const Vec2& a, const Vec2& b, const Vec2& c) {
  // Edge vectors opposite each vertex; grad(phi_i) = rot90(e_i) / (2 area).
  const Vec2 e[3] = {c - b, a - c, b - a};
  const double area2 = e[2].x() * (-e[1].y()) - e[2].y() * (-e[1].x());
  Eigen::Matrix3d k;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k(i, j) = e[i].dot(e[j]) / (2.0 * area2);
  return k;
}

SparseMatrix conductivity_stiffness(const Mesh& mesh, std::span<const double> triangle_sigma) {
  if (static_cast<int>(triangle_sigma.size()) != mesh.num_triangles())
    throw InputError("conductivity vector length differs from the triangle count");
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) add_element(triplets, mesh, t, triangle_sigma[t]);
  return from_triplets(mesh.num_nodes(), triplets);
}

StiffnessMatrices assemble_stiffness(const Mesh& mesh, const PixelPartition& partition,
                                     double sigma0, std::span<const double> sigma_l) {
  if (!(sigma0 > 0.0)) throw InputError("background conductivity sigma0 must be positive");
  if (static_cast<int>(sigma_l.size()) != partition.num_pixels())
    throw InputError("expected one conductivity amplitude per pixel");
  if (static_cast<int>(partition.triangle_to_pixel.size()) != mesh.num_triangles())
    throw InputError("pixel partition does not match the mesh");
  for (std::size_t l = 0; l < sigma_l.size(); ++l) {
    if (!(sigma_l[l] >= 0.0 && sigma_l[l] < sigma0))
      throw InputError("pixel " + std::to_string(l + 1) +
                       ": amplitude must satisfy 0 <= sigma_l < sigma0");
  }

  StiffnessMatrices out;
  std::vector<Triplet> background;
  background.reserve(9 * mesh.triangles.size());
  std::vector<std::vector<Triplet>> pixel(partition.num_pixels());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    add_element(background, mesh, t, sigma0);
    const int l = partition.triangle_to_pixel[t];
    add_element(pixel[l], mesh, t, sigma_l[l]);
  }
  out.background = from_triplets(mesh.num_nodes(), background);
  out.pixel.reserve(pixel.size());
  for (const auto& p : pixel) out.pixel.push_back(from_triplets(mesh.num_nodes(), p));
  return out;
}

ElectrodeMatrices assemble_electrode_mass(const Mesh& mesh, const ElectrodeGeometry& electrodes) {
  ElectrodeMatrices out;
  const int n = mesh.num_nodes();
  for (const auto& run : electrodes.edges) {
    std::vector<Triplet> triplets;
    Eigen::VectorXd load = Eigen::VectorXd::Zero(n);
    for (int e : run) {
      const auto [a, b] = mesh.boundary_edges.at(e).nodes;
      const double h = (mesh.nodes[b] - mesh.nodes[a]).norm();
      triplets.emplace_back(a, a, h / 3.0);
      triplets.emplace_back(b, b, h / 3.0);
      triplets.emplace_back(a, b, h / 6.0);
      triplets.emplace_back(b, a, h / 6.0);
      load[a] += 0.5 * h;
      load[b] += 0.5 * h;
    }
    out.mass.push_back(from_triplets(n, triplets));
    out.load.push_back(std::move(load));
  }
  return out;
}

SpatialMatrices assemble_spatial(const Mesh& mesh, const PixelPartition& partition,
                                 double sigma0, std::span<const double> sigma_l) {
  auto stiffness = assemble_stiffness(mesh, partition, sigma0, sigma_l);
  const auto electrodes = electrode_geometry(mesh);
  auto boundary = assemble_electrode_mass(mesh, electrodes);
  SpatialMatrices out;
  out.A0 = std::move(stiffness.background);
  out.A = std::move(stiffness.pixel);
  out.S = std::move(boundary.mass);
  out.g = std::move(boundary.load);
  out.lengths = electrodes.lengths;
  return out;
}

}  // namespace sgeit
