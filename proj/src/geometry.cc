#include "sgeit/geometry.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "sgeit/error.h"

namespace sgeit {

namespace {

using json = nlohmann::json;

std::string edge_name(const BoundaryEdge& e, std::size_t index) {
  std::ostringstream os;
  os << "boundary edge " << index << " (" << e.nodes[0] << ", " << e.nodes[1] << ")";
  return os.str();
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

// Index of the boundary edge that ends where `edge` starts, following the
// directed boundary loops. Assumes validated loop structure.
std::vector<int> predecessor_edges(const Mesh& mesh) {
  std::map<int, int> ending_at;
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e)
    ending_at[mesh.boundary_edges[e].nodes[1]] = static_cast<int>(e);
  std::vector<int> pred(mesh.boundary_edges.size(), -1);
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    auto it = ending_at.find(mesh.boundary_edges[e].nodes[0]);
    if (it != ending_at.end()) pred[e] = it->second;
  }
  return pred;
}

std::vector<int> successor_edges(const Mesh& mesh) {
  std::map<int, int> starting_at;
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e)
    starting_at[mesh.boundary_edges[e].nodes[0]] = static_cast<int>(e);
  std::vector<int> succ(mesh.boundary_edges.size(), -1);
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    auto it = starting_at.find(mesh.boundary_edges[e].nodes[1]);
    if (it != starting_at.end()) succ[e] = it->second;
  }
  return succ;
}

// Checks that each electrode tag forms one connected run of boundary edges.
void check_electrode_runs(const Mesh& mesh, const std::vector<int>& pred) {
  const int M = mesh.num_electrodes();
  std::vector<int> starts(M + 1, 0), counts(M + 1, 0);
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    const auto& tag = mesh.boundary_edges[e].electrode;
    if (!tag) continue;
    ++counts[*tag];
    const int p = pred[e];
    if (p < 0 || mesh.boundary_edges[p].electrode != tag) ++starts[*tag];
  }
  for (int m = 1; m <= M; ++m) {
    if (counts[m] == 0)
      throw InputError("electrode " + std::to_string(m) + " has no boundary edges");
    // starts == 0 means the electrode covers a whole boundary loop
    if (starts[m] > 1)
      throw InputError("electrode " + std::to_string(m) + " is not a connected run of edges");
  }
}

}  // namespace

int Mesh::num_electrodes() const {
  int M = 0;
  for (const auto& e : boundary_edges)
    if (e.electrode) M = std::max(M, *e.electrode);
  return M;
}

double Mesh::signed_area(int triangle) const {
  const auto& t = triangles[triangle];
  const Vec2 u = nodes[t[1]] - nodes[t[0]];
  const Vec2 v = nodes[t[2]] - nodes[t[0]];
  return 0.5 * (u.x() * v.y() - u.y() * v.x());
}

Vec2 Mesh::centroid(int triangle) const {
  const auto& t = triangles[triangle];
  return (nodes[t[0]] + nodes[t[1]] + nodes[t[2]]) / 3.0;
}

void validate_mesh(const Mesh& mesh) {
  const int n = mesh.num_nodes();
  if (n < 3) throw InputError("mesh needs at least 3 nodes");
  if (mesh.triangles.empty()) throw InputError("mesh has no triangles");
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(mesh.nodes[i].x()) || !std::isfinite(mesh.nodes[i].y()))
      throw InputError("node " + std::to_string(i) + " has non-finite coordinates");

  // Directed half-edges of all triangles; a boundary half-edge has no twin.
  std::map<std::pair<int, int>, int> half_edges;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= n)
        throw InputError("triangle " + std::to_string(t) + " has node index out of range");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw InputError("triangle " + std::to_string(t) + " repeats a node");
    if (!(mesh.signed_area(t) > 0.0))
      throw InputError("non-positive triangle area (triangle " + std::to_string(t) + ")");
    for (int k = 0; k < 3; ++k) {
      auto key = std::make_pair(tri[k], tri[(k + 1) % 3]);
      if (!half_edges.emplace(key, t).second)
        throw InputError("triangle " + std::to_string(t) + " duplicates a directed edge");
    }
  }

  std::map<std::pair<int, int>, std::size_t> listed;
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    const auto& be = mesh.boundary_edges[e];
    const auto [a, b] = be.nodes;
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw InputError(edge_name(be, e) + " has node index out of range");
    if (a == b) throw InputError(edge_name(be, e) + " is degenerate");
    if (be.electrode && *be.electrode < 1)
      throw InputError(edge_name(be, e) + " has electrode tag below 1");
    if (!half_edges.contains({a, b}) || half_edges.contains({b, a}))
      throw InputError(edge_name(be, e) +
                       " is not a counterclockwise boundary edge of the triangulation");
    if (!listed.emplace(std::make_pair(a, b), e).second)
      throw InputError(edge_name(be, e) + " is listed twice");
  }
  for (const auto& [key, t] : half_edges) {
    if (!half_edges.contains({key.second, key.first}) && !listed.contains(key))
      throw InputError("triangle " + std::to_string(t) + " has a boundary edge (" +
                       std::to_string(key.first) + ", " + std::to_string(key.second) +
                       ") missing from boundary_edges");
  }

  // Closed loops: every boundary node has exactly one incoming and one outgoing edge.
  std::map<int, int> out_degree, in_degree;
  for (const auto& be : mesh.boundary_edges) {
    ++out_degree[be.nodes[0]];
    ++in_degree[be.nodes[1]];
  }
  for (const auto& [node, deg] : out_degree)
    if (deg != 1 || in_degree[node] != 1)
      throw InputError("boundary is not a set of closed loops at node " + std::to_string(node));
  for (const auto& [node, deg] : in_degree)
    if (deg != 1 || out_degree[node] != 1)
      throw InputError("boundary is not a set of closed loops at node " + std::to_string(node));

  check_electrode_runs(mesh, predecessor_edges(mesh));
}

Mesh mesh_from_json(const json& j) {
  Mesh mesh;
  try {
    for (const auto& p : j.at("nodes")) {
      if (p.size() != 2) throw InputError("node entry must have 2 coordinates");
      mesh.nodes.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    for (const auto& t : j.at("triangles")) {
      if (t.size() != 3) throw InputError("triangle entry must have 3 node indices");
      mesh.triangles.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
    }
    for (const auto& e : j.at("boundary_edges")) {
      BoundaryEdge be;
      const auto& nodes = e.at("nodes");
      if (nodes.size() != 2) throw InputError("boundary edge must have 2 node indices");
      be.nodes = {nodes.at(0).get<int>(), nodes.at(1).get<int>()};
      if (e.contains("electrode") && !e.at("electrode").is_null())
        be.electrode = e.at("electrode").get<int>();
      mesh.boundary_edges.push_back(be);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("mesh parse error: ") + e.what());
  }
  validate_mesh(mesh);
  return mesh;
}

json mesh_to_json(const Mesh& mesh) {
  json nodes = json::array(), triangles = json::array(), edges = json::array();
  for (const auto& p : mesh.nodes) nodes.push_back({p.x(), p.y()});
  for (const auto& t : mesh.triangles) triangles.push_back({t[0], t[1], t[2]});
  for (const auto& e : mesh.boundary_edges) {
    json je = {{"nodes", {e.nodes[0], e.nodes[1]}}};
    je["electrode"] = e.electrode ? json(*e.electrode) : json(nullptr);
    edges.push_back(std::move(je));
  }
  return {{"nodes", std::move(nodes)},
          {"triangles", std::move(triangles)},
          {"boundary_edges", std::move(edges)}};
}

Mesh load_mesh(const std::filesystem::path& path) {
  try {
    return mesh_from_json(read_json_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  write_text_file(path, mesh_to_json(mesh).dump() + "\n");
}

Mesh make_disk_fixture(int n_rings, int n_sectors, int num_electrodes, double coverage) {
  if (n_rings < 1 || n_sectors < 3)
    throw InputError("disk fixture needs n_rings >= 1 and n_sectors >= 3");
  if (num_electrodes < 1 || n_sectors % num_electrodes != 0)
    throw InputError("n_sectors (" + std::to_string(n_sectors) +
                     ") must be divisible by the electrode count (" +
                     std::to_string(num_electrodes) + ")");
  if (!(coverage > 0.0 && coverage < 1.0))
    throw InputError("electrode coverage must lie in (0, 1)");
  const int per_electrode = n_sectors / num_electrodes;
  const int covered = static_cast<int>(std::floor(coverage * per_electrode + 1e-9));
  if (covered < 1) throw InputError("electrode coverage leaves an electrode without edges");

  Mesh mesh;
  mesh.nodes.reserve(1 + n_rings * n_sectors);
  mesh.nodes.emplace_back(0.0, 0.0);
  for (int r = 1; r <= n_rings; ++r) {
    const double radius = static_cast<double>(r) / n_rings;
    for (int s = 0; s < n_sectors; ++s) {
      const double angle = 2.0 * std::numbers::pi * s / n_sectors;
      mesh.nodes.emplace_back(radius * std::cos(angle), radius * std::sin(angle));
    }
  }
  auto node = [&](int r, int s) { return 1 + (r - 1) * n_sectors + (s % n_sectors); };

  for (int s = 0; s < n_sectors; ++s) mesh.triangles.push_back({0, node(1, s), node(1, s + 1)});
  for (int r = 1; r < n_rings; ++r) {
    for (int s = 0; s < n_sectors; ++s) {
      const int a = node(r, s), b = node(r + 1, s), c = node(r + 1, s + 1), d = node(r, s + 1);
      if (s % 2 == 0) {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
      } else {
        mesh.triangles.push_back({a, b, d});
        mesh.triangles.push_back({b, c, d});
      }
    }
  }

  for (int s = 0; s < n_sectors; ++s) {
    BoundaryEdge e;
    e.nodes = {node(n_rings, s), node(n_rings, s + 1)};
    const int m = s / per_electrode;
    const int first = m * per_electrode + (per_electrode - covered) / 2;
    if (s >= first && s < first + covered) e.electrode = m + 1;
    mesh.boundary_edges.push_back(e);
  }
  validate_mesh(mesh);
  return mesh;
}

std::vector<std::vector<int>> PixelPartition::pixel_triangles() const {
  std::vector<std::vector<int>> owned(seeds.size());
  for (std::size_t t = 0; t < triangle_to_pixel.size(); ++t)
    owned[triangle_to_pixel[t]].push_back(static_cast<int>(t));
  return owned;
}

PixelPartition assign_pixels(const Mesh& mesh, std::span<const Vec2> seeds) {
  if (seeds.empty()) throw InputError("pixel partition needs at least one seed");
  PixelPartition partition;
  partition.seeds.assign(seeds.begin(), seeds.end());
  partition.triangle_to_pixel.resize(mesh.triangles.size());
  std::vector<int> owned(seeds.size(), 0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 c = mesh.centroid(t);
    int best = 0;
    double best_d2 = (c - seeds[0]).squaredNorm();
    for (std::size_t l = 1; l < seeds.size(); ++l) {
      const double d2 = (c - seeds[l]).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<int>(l);
      }
    }
    partition.triangle_to_pixel[t] = best;
    ++owned[best];
  }
  for (std::size_t l = 0; l < seeds.size(); ++l)
    if (owned[l] == 0)
      throw InputError("pixel " + std::to_string(l + 1) +
                       " owns no triangle; the seed grid is too fine for the mesh");
  return partition;
}

std::vector<Vec2> ring_seeds(std::span<const int> counts, std::span<const double> radii,
                             double phase) {
  if (counts.size() != radii.size()) throw InputError("ring counts and radii differ in length");
  std::vector<Vec2> seeds;
  for (std::size_t r = 0; r < counts.size(); ++r) {
    if (counts[r] < 1) throw InputError("every seed ring needs at least one seed");
    for (int k = 0; k < counts[r]; ++k) {
      const double angle = phase + 2.0 * std::numbers::pi * k / counts[r];
      seeds.emplace_back(radii[r] * std::cos(angle), radii[r] * std::sin(angle));
    }
  }
  return seeds;
}

std::vector<Vec2> hex_seeds(double spacing, double radius) {
  if (!(spacing > 0.0) || !(radius > 0.0)) throw InputError("hex lattice needs positive sizes");
  const int extent = static_cast<int>(std::ceil(2.0 * radius / spacing)) + 1;
  const double row_height = spacing * std::sqrt(3.0) / 2.0;
  std::vector<Vec2> seeds;
  for (int j = -extent; j <= extent; ++j) {
    for (int i = -extent; i <= extent; ++i) {
      const Vec2 p(spacing * (i + 0.5 * (j & 1)), row_height * j);
      if (p.norm() <= radius * (1.0 + 1e-12)) seeds.push_back(p);
    }
  }
  return seeds;
}

std::vector<Vec2> seeds_from_json(const json& j) {
  std::vector<Vec2> seeds;
  try {
    const json& list = j.is_object() ? j.at("seeds") : j;
    for (const auto& p : list) {
      if (p.size() != 2) throw InputError("seed entry must have 2 coordinates");
      seeds.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("seed parse error: ") + e.what());
  }
  if (seeds.empty()) throw InputError("seed list is empty");
  return seeds;
}

json seeds_to_json(std::span<const Vec2> seeds) {
  json list = json::array();
  for (const auto& p : seeds) list.push_back({p.x(), p.y()});
  return {{"seeds", std::move(list)}};
}

std::vector<Vec2> load_seeds(const std::filesystem::path& path) {
  try {
    return seeds_from_json(read_json_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

ElectrodeGeometry electrode_geometry(const Mesh& mesh) {
  const int M = mesh.num_electrodes();
  if (M == 0) throw InputError("no electrodes");
  const auto pred = predecessor_edges(mesh);
  const auto succ = successor_edges(mesh);
  check_electrode_runs(mesh, pred);

  ElectrodeGeometry geometry;
  geometry.edges.resize(M);
  geometry.lengths.assign(M, 0.0);
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    const auto& tag = mesh.boundary_edges[e].electrode;
    if (!tag) continue;
    auto& run = geometry.edges[*tag - 1];
    if (!run.empty()) continue;
    // Walk back to the first edge of the run, then forward along it.
    int start = static_cast<int>(e);
    for (std::size_t guard = 0; guard < mesh.boundary_edges.size(); ++guard) {
      const int p = pred[start];
      if (p < 0 || mesh.boundary_edges[p].electrode != tag || p == static_cast<int>(e)) break;
      start = p;
    }
    int cur = start;
    do {
      run.push_back(cur);
      cur = succ[cur];
    } while (cur >= 0 && cur != start && mesh.boundary_edges[cur].electrode == tag);
  }
  for (int m = 0; m < M; ++m) {
    for (int e : geometry.edges[m]) {
      const auto& be = mesh.boundary_edges[e];
      geometry.lengths[m] += (mesh.nodes[be.nodes[1]] - mesh.nodes[be.nodes[0]]).norm();
    }
    if (!(geometry.lengths[m] > 0.0))
      throw InputError("electrode " + std::to_string(m + 1) + " has zero length");
  }
  return geometry;
}

}  // namespace sgeit
