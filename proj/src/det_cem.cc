#include "sgeit/det_cem.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <Eigen/SparseCholesky>

#include "sgeit/error.h"

namespace sgeit {

namespace {

using json = nlohmann::json;
using Triplet = Eigen::Triplet<double>;

// Columns are the mean-free basis vectors e_1 - e_{i+1}.
Eigen::MatrixXd voltage_basis(int M) {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(M, M - 1);
  for (int i = 0; i < M - 1; ++i) {
    W(0, i) = 1.0;
    W(i + 1, i) = -1.0;
  }
  return W;
}

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

DeterministicSample params_from_y(std::span<const double> y, const ParameterModel& model) {
  if (static_cast<int>(y.size()) != model.dimension())
    throw InputError("parameter vector length differs from pixels + electrodes");
  DeterministicSample sample;
  const int L = model.num_pixels();
  for (int l = 0; l < L; ++l) sample.pixel_sigma.push_back(model.pixel_value(l, y[l]));
  for (int m = 0; m < model.num_electrodes(); ++m)
    sample.zeta.push_back(model.contact_value(m, y[L + m]));
  return sample;
}

CemForwardModel::CemForwardModel(Mesh mesh, PixelPartition partition)
    : mesh_(std::move(mesh)), partition_(std::move(partition)) {
  if (static_cast<int>(partition_.triangle_to_pixel.size()) != mesh_.num_triangles())
    throw InputError("pixel partition does not match the mesh");
  const auto electrodes = electrode_geometry(mesh_);
  if (electrodes.num_electrodes() < 2)
    throw InputError("the electrode model needs at least two electrodes");
  auto boundary = assemble_electrode_mass(mesh_, electrodes);
  mass_ = std::move(boundary.mass);
  load_ = std::move(boundary.load);
  lengths_ = electrodes.lengths;
}

std::vector<double> CemForwardModel::triangle_conductivity(
    std::span<const double> pixel_sigma) const {
  if (static_cast<int>(pixel_sigma.size()) != partition_.num_pixels())
    throw InputError("expected one conductivity per pixel");
  std::vector<double> sigma(mesh_.triangles.size());
  for (std::size_t t = 0; t < sigma.size(); ++t) sigma[t] = pixel_sigma[partition_.triangle_to_pixel[t]];
  return sigma;
}

std::vector<CemSolution> CemForwardModel::solve(std::span<const double> triangle_sigma,
                                                std::span<const double> zeta,
                                                const std::vector<Eigen::VectorXd>& currents) const {
  const int M = num_electrodes();
  const int n = mesh_.num_nodes();
  if (static_cast<int>(zeta.size()) != M) throw InputError("expected one contact conductance per electrode");
  for (double s : triangle_sigma)
    if (!(s > 0.0)) throw InputError("conductivity must be strictly positive");
  for (double z : zeta)
    if (!(z > 0.0)) throw InputError("contact conductance must be strictly positive");

  // Bilinear form sum_m zeta_m int (U_m - u)(V_m - v) with U = W beta.
  const Eigen::MatrixXd W = voltage_basis(M);
  SparseMatrix interior = conductivity_stiffness(mesh_, triangle_sigma);
  for (int m = 0; m < M; ++m) interior += zeta[m] * mass_[m];
  Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(n, M - 1);
  Eigen::MatrixXd voltage_block = Eigen::MatrixXd::Zero(M - 1, M - 1);
  for (int m = 0; m < M; ++m) {
    coupling -= zeta[m] * load_[m] * W.row(m);
    voltage_block += zeta[m] * lengths_[m] * W.row(m).transpose() * W.row(m);
  }

  std::vector<Triplet> triplets;
  triplets.reserve(interior.nonZeros() + 2 * n * (M - 1) + (M - 1) * (M - 1));
  for (int k = 0; k < interior.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(interior, k); it; ++it)
      triplets.emplace_back(it.row(), it.col(), it.value());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < M - 1; ++i)
      if (coupling(j, i) != 0.0) {
        triplets.emplace_back(j, n + i, coupling(j, i));
        triplets.emplace_back(n + i, j, coupling(j, i));
      }
  for (int i = 0; i < M - 1; ++i)
    for (int k = 0; k < M - 1; ++k) triplets.emplace_back(n + i, n + k, voltage_block(i, k));
  SparseMatrix K(n + M - 1, n + M - 1);
  K.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt(K);
  if (llt.info() != Eigen::Success)
    throw NumericalError("deterministic CEM system is singular; the mesh may be broken");

  std::vector<CemSolution> out;
  for (const auto& current : currents) {
    if (current.size() != M) throw InputError("current pattern length differs from M");
    if (std::abs(current.sum()) > 1e-12 * std::max(1.0, current.cwiseAbs().maxCoeff()))
      throw InputError("current pattern is not mean-free");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + M - 1);
    rhs.tail(M - 1) = W.transpose() * current;
    Eigen::VectorXd x = llt.solve(rhs);
    const double norm = rhs.norm();
    auto residual = [&] { return norm > 0.0 ? (K * x - rhs).norm() / norm : (K * x).norm(); };
    double r = residual();
    for (int step = 0; step < 3 && r > 1e-13; ++step) {
      x += llt.solve(rhs - K * x);
      r = residual();
    }
    if (!(r <= 1e-12))
      throw NumericalError("deterministic CEM residual " + std::to_string(r) + " exceeds 1e-12");
    CemSolution s;
    s.potentials = x.head(n);
    s.voltages = W * x.tail(M - 1);
    s.residual = r;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<CemSolution> CemForwardModel::solve(const DeterministicSample& sample,
                                                const std::vector<Eigen::VectorXd>& currents) const {
  const auto sigma = triangle_conductivity(sample.pixel_sigma);
  return solve(sigma, sample.zeta, currents);
}

CemSolution solve_deterministic(const Mesh& mesh, const PixelPartition& partition,
                                const DeterministicSample& sample, std::span<const double> current) {
  const CemForwardModel model(mesh, partition);
  const Eigen::VectorXd I = Eigen::Map<const Eigen::VectorXd>(current.data(), current.size());
  return model.solve(sample, {I}).front();
}

std::vector<double> Phantom::triangle_conductivity(const Mesh& mesh,
                                                   const PixelPartition* partition) const {
  std::vector<double> sigma(mesh.triangles.size(), background);
  if (!pixel_sigma.empty()) {
    if (!partition || static_cast<int>(pixel_sigma.size()) != partition->num_pixels())
      throw InputError("phantom pixel values need a matching pixel partition");
    for (std::size_t t = 0; t < sigma.size(); ++t) sigma[t] = pixel_sigma[partition->triangle_to_pixel[t]];
  }
  for (const auto& inc : inclusions)
    for (int t = 0; t < mesh.num_triangles(); ++t)
      if ((mesh.centroid(t) - inc.center).norm() < inc.radius) sigma[t] = inc.sigma;
  for (double s : sigma)
    if (!(s > 0.0) || !std::isfinite(s)) throw InputError("phantom conductivities must lie in (0, inf)");
  return sigma;
}

Phantom phantom_from_json(const json& j, int num_electrodes) {
  Phantom p;
  try {
    p.background = j.value("background", 1.1);
    if (j.contains("pixel_sigma")) p.pixel_sigma = j.at("pixel_sigma").get<std::vector<double>>();
    if (j.contains("inclusions"))
      for (const auto& inc : j.at("inclusions"))
        p.inclusions.push_back({Vec2(inc.at("center").at(0).get<double>(), inc.at("center").at(1).get<double>()),
                                inc.at("radius").get<double>(), inc.at("sigma").get<double>()});
    const auto& zeta = j.at("zeta");
    if (zeta.is_number())
      p.zeta.assign(num_electrodes, zeta.get<double>());
    else
      p.zeta = zeta.get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw InputError(std::string("phantom parse error: ") + e.what());
  }
  if (static_cast<int>(p.zeta.size()) != num_electrodes)
    throw InputError("phantom needs one contact conductance per electrode");
  for (double z : p.zeta)
    if (!(z > 0.0) || !std::isfinite(z)) throw InputError("phantom contact conductances must lie in (0, inf)");
  if (!(p.background > 0.0)) throw InputError("phantom conductivities must lie in (0, inf)");
  return p;
}

Phantom load_phantom(const std::filesystem::path& path, int num_electrodes) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return phantom_from_json(json::parse(in), num_electrodes);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

Eigen::VectorXd MeasurementSet::stacked() const {
  Eigen::Index total = 0;
  for (const auto& v : voltages) total += v.size();
  Eigen::VectorXd out(total);
  Eigen::Index pos = 0;
  for (const auto& v : voltages) {
    out.segment(pos, v.size()) = v;
    pos += v.size();
  }
  return out;
}

double percent_noise_level(const Eigen::VectorXd& stacked, double percent) {
  if (stacked.size() == 0) return 0.0;
  return 0.01 * percent * (stacked.maxCoeff() - stacked.minCoeff());
}

MeasurementSet simulate_measurements(const CemForwardModel& model,
                                     std::span<const double> triangle_sigma,
                                     std::span<const double> zeta,
                                     const std::vector<Eigen::VectorXd>& patterns,
                                     const NoiseSpec& noise, std::uint64_t seed) {
  if (noise.std_mv < 0.0 || noise.percent < 0.0) throw InputError("noise level must be non-negative");
  MeasurementSet m;
  m.patterns = patterns;
  m.seed = seed;
  for (const auto& s : model.solve(triangle_sigma, zeta, patterns)) m.voltages.push_back(s.voltages);
  m.noise_std = noise.use_percent ? percent_noise_level(m.stacked(), noise.percent) : noise.std_mv;
  if (m.noise_std > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, m.noise_std);
    for (auto& v : m.voltages)
      for (Eigen::Index k = 0; k < v.size(); ++k) v[k] += gauss(rng);
  }
  return m;
}

json measurements_to_json(const MeasurementSet& m) {
  json patterns = json::array(), voltages = json::array();
  for (const auto& p : m.patterns) patterns.push_back(vector_json(p));
  for (const auto& v : m.voltages) voltages.push_back(vector_json(v));
  json j = {{"patterns", std::move(patterns)},
            {"voltages", std::move(voltages)},
            {"noise_std", m.noise_std},
            {"seed", m.seed}};
  if (!m.note.empty()) j["note"] = m.note;
  return j;
}

MeasurementSet measurements_from_json(const json& j) {
  MeasurementSet m;
  try {
    for (const auto& p : j.at("patterns")) {
      const auto v = p.get<std::vector<double>>();
      m.patterns.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()));
    }
    for (const auto& p : j.at("voltages")) {
      const auto v = p.get<std::vector<double>>();
      m.voltages.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()));
    }
    m.noise_std = j.value("noise_std", 0.0);
    m.seed = j.value("seed", std::uint64_t{0});
    m.note = j.value("note", std::string{});
  } catch (const json::exception& e) {
    throw InputError(std::string("measurement parse error: ") + e.what());
  }
  if (m.patterns.size() != m.voltages.size())
    throw InputError("measurement file has different numbers of patterns and voltage blocks");
  for (const auto& p : m.patterns)
    if (std::abs(p.sum()) > 1e-12 * std::max(1.0, p.cwiseAbs().maxCoeff()))
      throw InputError("measurement current pattern is not mean-free");
  return m;
}

void save_measurements(const MeasurementSet& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << measurements_to_json(m).dump() << "\n";
}

MeasurementSet load_measurements(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return measurements_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace sgeit
