#ifndef SGEIT_GEOMETRY_H_
#define SGEIT_GEOMETRY_H_

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace sgeit {

using Vec2 = Eigen::Vector2d;

/// A boundary edge. Orientation follows the counterclockwise traversal of the
/// boundary, so the outward normal points to the right of nodes[0] -> nodes[1].
struct BoundaryEdge {
  std::array<int, 2> nodes{};
  std::optional<int> electrode;  // 1-based electrode tag, empty when untagged

  bool operator==(const BoundaryEdge&) const = default;
};

/// 2D triangulation in centimeters. Node indices are 0-based.
struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<BoundaryEdge> boundary_edges;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  /// Largest electrode tag present (0 when the boundary is untagged).
  int num_electrodes() const;
  double signed_area(int triangle) const;
  Vec2 centroid(int triangle) const;

  bool operator==(const Mesh&) const = default;
};

/// Checks every Mesh invariant and throws InputError naming the first
/// offending entity.
void validate_mesh(const Mesh& mesh);

Mesh mesh_from_json(const nlohmann::json& j);
nlohmann::json mesh_to_json(const Mesh& mesh);
Mesh load_mesh(const std::filesystem::path& path);
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);

/// Polar-grid triangulation of the unit disk: a center node plus n_rings rings
/// of n_sectors nodes each. Diagonals alternate by sector parity, so the mesh
/// is mirror symmetric about the x-axis (and about the y-axis when n_sectors
/// is a multiple of 4). Electrode m covers the centered fraction `coverage`
/// of the m-th of M equal boundary arcs.
Mesh make_disk_fixture(int n_rings, int n_sectors, int num_electrodes, double coverage);

/// Labels every triangle with a pixel index. Pixel indices are 0-based here;
/// pixel l corresponds to D_{l+1} and y_{l+1}.
struct PixelPartition {
  std::vector<Vec2> seeds;
  std::vector<int> triangle_to_pixel;

  int num_pixels() const { return static_cast<int>(seeds.size()); }
  /// Triangles owned by each pixel, in increasing triangle order.
  std::vector<std::vector<int>> pixel_triangles() const;
};

/// Nearest-seed assignment of triangle centroids; ties go to the lowest seed.
/// Throws InputError when a seed captures no triangle.
PixelPartition assign_pixels(const Mesh& mesh, std::span<const Vec2> seeds);

/// Seeds on concentric circles: counts[r] points at radius radii[r], the first
/// at angle `phase`.
std::vector<Vec2> ring_seeds(std::span<const int> counts, std::span<const double> radii,
                             double phase = 0.0);

/// Points of a hexagonal lattice with the given spacing, centered at the
/// origin, that lie within `radius`.
std::vector<Vec2> hex_seeds(double spacing, double radius);

std::vector<Vec2> seeds_from_json(const nlohmann::json& j);
nlohmann::json seeds_to_json(std::span<const Vec2> seeds);
std::vector<Vec2> load_seeds(const std::filesystem::path& path);

struct ElectrodeGeometry {
  /// edges[m] lists boundary-edge indices of electrode m+1 in boundary order.
  std::vector<std::vector<int>> edges;
  std::vector<double> lengths;

  int num_electrodes() const { return static_cast<int>(edges.size()); }
};

ElectrodeGeometry electrode_geometry(const Mesh& mesh);

}  // namespace sgeit

#endif  // SGEIT_GEOMETRY_H_
