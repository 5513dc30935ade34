#ifndef SGEIT_DET_CEM_H_
#define SGEIT_DET_CEM_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "sgeit/fem.h"
#include "sgeit/geometry.h"
#include "sgeit/parameters.h"

namespace sgeit {

/// Physical values at one parameter point: pixel conductivities (mS) and
/// contact conductances (mS/cm).
struct DeterministicSample {
  std::vector<double> pixel_sigma;
  std::vector<double> zeta;
};

DeterministicSample params_from_y(std::span<const double> y, const ParameterModel& model);

struct CemSolution {
  Eigen::VectorXd potentials;  // nodal values, mV
  Eigen::VectorXd voltages;    // electrode voltages in the mean-free space, mV
  double residual = 0.0;
};

/// Deterministic complete electrode model on a fixed mesh. The spatial
/// matrices come from the fem module; the system for one conductivity is
/// factorized once and reused for every current pattern.
class CemForwardModel {
 public:
  CemForwardModel(Mesh mesh, PixelPartition partition);

  const Mesh& mesh() const { return mesh_; }
  const PixelPartition& partition() const { return partition_; }
  int num_electrodes() const { return static_cast<int>(lengths_.size()); }

  std::vector<CemSolution> solve(std::span<const double> triangle_sigma,
                                 std::span<const double> zeta,
                                 const std::vector<Eigen::VectorXd>& currents) const;
  std::vector<CemSolution> solve(const DeterministicSample& sample,
                                 const std::vector<Eigen::VectorXd>& currents) const;

  /// Per-triangle conductivity of a pixelwise sample.
  std::vector<double> triangle_conductivity(std::span<const double> pixel_sigma) const;

 private:
  Mesh mesh_;
  PixelPartition partition_;
  std::vector<SparseMatrix> mass_;
  std::vector<Eigen::VectorXd> load_;
  std::vector<double> lengths_;
};

CemSolution solve_deterministic(const Mesh& mesh, const PixelPartition& partition,
                                const DeterministicSample& sample,
                                std::span<const double> current);

/// A phantom: a background conductivity, optional per-pixel values, and
/// circular inclusions painted on top by triangle centroid.
struct Inclusion {
  Vec2 center;
  double radius = 0.0;
  double sigma = 0.0;
};

struct Phantom {
  double background = 1.1;
  std::vector<double> pixel_sigma;  // overrides background when nonempty
  std::vector<Inclusion> inclusions;
  std::vector<double> zeta;  // one per electrode

  std::vector<double> triangle_conductivity(const Mesh& mesh, const PixelPartition* partition) const;
};

Phantom phantom_from_json(const nlohmann::json& j, int num_electrodes);
Phantom load_phantom(const std::filesystem::path& path, int num_electrodes);

struct MeasurementSet {
  std::vector<Eigen::VectorXd> patterns;  // mA
  std::vector<Eigen::VectorXd> voltages;  // mV, one full electrode vector per pattern
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  std::string note;

  /// Voltage blocks concatenated in pattern order.
  Eigen::VectorXd stacked() const;
};

/// How much Gaussian noise to add: an explicit level (mV) or a percentage of
/// the range of the noise-free stacked voltages.
struct NoiseSpec {
  double std_mv = 0.0;
  double percent = 0.0;
  bool use_percent = false;
};

/// xi = percent / 100 * (max(v) - min(v)).
double percent_noise_level(const Eigen::VectorXd& stacked, double percent);

MeasurementSet simulate_measurements(const CemForwardModel& model,
                                     std::span<const double> triangle_sigma,
                                     std::span<const double> zeta,
                                     const std::vector<Eigen::VectorXd>& patterns,
                                     const NoiseSpec& noise, std::uint64_t seed);

nlohmann::json measurements_to_json(const MeasurementSet& m);
MeasurementSet measurements_from_json(const nlohmann::json& j);
void save_measurements(const MeasurementSet& m, const std::filesystem::path& path);
MeasurementSet load_measurements(const std::filesystem::path& path);

}  // namespace sgeit

#endif  // SGEIT_DET_CEM_H_
