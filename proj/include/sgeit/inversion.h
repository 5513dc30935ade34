#ifndef SGEIT_INVERSION_H_
#define SGEIT_INVERSION_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <json.hpp>

#include "sgeit/det_cem.h"
#include "sgeit/error.h"
#include "sgeit/surrogate.h"

namespace sgeit {

inline constexpr double kOutsideSupport = std::numeric_limits<double>::infinity();

/// Measurement noise with covariance xi^2 I (mV^2).
struct NoiseModel {
  double xi = 0.0;

  static NoiseModel explicit_level(double xi_mv);
  /// xi = percent / 100 * (max(v) - min(v)).
  static NoiseModel percent_of_range(const Eigen::VectorXd& data, double percent);
};

/// Squared-exponential covariance over pixel seeds, in y-units.
struct SmoothnessPrior {
  Eigen::MatrixXd cov;
  double length = 0.0;
  double eta = 0.0;
  std::vector<Vec2> seeds;
  bool jittered = false;
  Eigen::LLT<Eigen::MatrixXd> chol;

  int size() const { return static_cast<int>(cov.rows()); }
  /// L^{-1} y, so that its squared norm is y^T M^{-1} y.
  Eigen::VectorXd whiten(const Eigen::VectorXd& y_sigma) const;
};

SmoothnessPrior build_prior_cov(std::span<const Vec2> seeds, double length, double eta);

/// Unnormalized posterior on the hypercube. F(y) = |v - U(y)|^2 / xi^2 + y_s^T M^{-1} y_s.
class Posterior {
 public:
  Posterior(Surrogate surrogate, Eigen::VectorXd data, NoiseModel noise, SmoothnessPrior prior);

  const Surrogate& surrogate() const { return surrogate_; }
  const Eigen::VectorXd& data() const { return data_; }
  const NoiseModel& noise() const { return noise_; }
  const SmoothnessPrior& prior() const { return prior_; }
  int dimension() const { return surrogate_.dimension(); }
  /// Length of the whitened residual: data entries followed by pixels.
  int residual_size() const { return static_cast<int>(data_.size()) + surrogate_.num_pixels(); }

  /// F(y), or kOutsideSupport outside the hypercube.
  double objective(std::span<const double> y) const;
  /// F(y) / 2, the negative log density up to a constant.
  double neg_log(std::span<const double> y) const;
  /// Whitened residual r(y) with F = |r|^2, and optionally dr/dy.
  void residual(std::span<const double> y, Eigen::VectorXd& r, Eigen::MatrixXd* jacobian) const;

 private:
  Surrogate surrogate_;
  Eigen::VectorXd data_;
  NoiseModel noise_;
  SmoothnessPrior prior_;
  Eigen::MatrixXd prior_whitener_;  // L^{-1}
};

/// Stacks the voltage blocks of a measurement set after checking that its
/// patterns are the surrogate's patterns.
Eigen::VectorXd data_for_surrogate(const Surrogate& surrogate, const MeasurementSet& data);

struct MapOptions {
  int max_iterations = 500;
  double gradient_tol = 1e-8;  // relative to 1 + |F|
  // Adds the residual-curvature term to the Gauss-Newton matrix. Without it
  // the iteration is only linearly convergent on nonzero-residual data.
  bool second_order = true;
};

struct MapResult {
  Eigen::VectorXd y;
  double objective = 0.0;
  double projected_gradient = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Projected damped Gauss-Newton with Armijo backtracking on the hypercube;
/// each step solves the damped quadratic model exactly on the box.
MapResult map_estimate(const Posterior& posterior, std::span<const double> start,
                       const MapOptions& options = {});
MapResult map_estimate(const Posterior& posterior, const MapOptions& options = {});

struct McmcConfig {
  std::size_t n_samples = 400000;
  std::size_t burn_in = 50000;
  std::size_t thinning = 5;
  double proposal_std = 0.07;
  std::uint64_t seed = 1;
};

struct Chain {
  int dimension = 0;
  std::vector<double> samples;  // row-major, one retained state per row
  double acceptance = 0.0;      // after burn-in
  std::string warning;

  std::size_t size() const { return dimension ? samples.size() / dimension : 0; }
  std::span<const double> sample(std::size_t i) const {
    return {samples.data() + i * dimension, static_cast<std::size_t>(dimension)};
  }
};

/// Random-walk Metropolis for any negative log density that returns +inf
/// outside its support. Proposals are isotropic Gaussian steps; steps that
/// leave the hypercube are rejected.
template <class NegLog>
Chain metropolis(NegLog&& neg_log, std::span<const double> start, const McmcConfig& config) {
  Chain chain;
  chain.dimension = static_cast<int>(start.size());
  std::vector<double> current(start.begin(), start.end());
  std::vector<double> proposal(current.size());
  double current_value = neg_log(std::span<const double>(current));
  if (!std::isfinite(current_value))
    throw InputError("the chain must start inside the support of the density");

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> step(0.0, config.proposal_std);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t thinning = std::max<std::size_t>(config.thinning, 1);
  const std::size_t total = config.burn_in + config.n_samples * thinning;
  chain.samples.reserve(config.n_samples * current.size());
  std::size_t accepted = 0;

  for (std::size_t it = 0; it < total; ++it) {
    bool inside = true;
    for (std::size_t k = 0; k < current.size(); ++k) {
      proposal[k] = current[k] + step(rng);
      inside = inside && proposal[k] >= -1.0 && proposal[k] <= 1.0;
    }
    // Draw the uniform unconditionally so the stream does not depend on the path.
    const double u = unit(rng);
    if (inside) {
      const double value = neg_log(std::span<const double>(proposal));
      if (std::isfinite(value) && std::log(u) < current_value - value) {
        current.swap(proposal);
        current_value = value;
        if (it >= config.burn_in) ++accepted;
      }
    }
    if (it >= config.burn_in && (it - config.burn_in + 1) % thinning == 0)
      chain.samples.insert(chain.samples.end(), current.begin(), current.end());
  }
  const std::size_t counted = total - config.burn_in;
  chain.acceptance = counted ? static_cast<double>(accepted) / counted : 0.0;
  if (counted && (chain.acceptance < 0.05 || chain.acceptance > 0.8))
    chain.warning = "acceptance rate " + std::to_string(chain.acceptance) +
                    " is outside [0.05, 0.8]; consider adjusting --proposal-std";
  return chain;
}

Chain mcmc_sample(const Posterior& posterior, const McmcConfig& config,
                  std::span<const double> start);

struct Estimates {
  Eigen::VectorXd y_map;
  std::vector<double> sigma_map, zeta_map;
  double map_objective = 0.0;
  int map_iterations = 0;
  bool map_converged = false;

  bool has_chain = false;
  std::vector<double> sigma_cm, sigma_sd, zeta_cm, zeta_sd;
  double acceptance = 0.0;
  std::size_t n = 0;
  double stabilization = 0.0;
  std::vector<std::string> warnings;
};

Estimates map_estimates(const MapResult& map, const ParameterModel& model);
/// Fills the CM/SD fields from a nonempty chain.
void cm_sd_estimates(const Chain& chain, const ParameterModel& model, Estimates& out);

nlohmann::json estimates_to_json(const Estimates& e);
Estimates estimates_from_json(const nlohmann::json& j);
void save_estimates(const Estimates& e, const std::filesystem::path& path);
Estimates load_estimates(const std::filesystem::path& path);

}  // namespace sgeit

#endif  // SGEIT_INVERSION_H_
