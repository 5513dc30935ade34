#include "sgeit/inversion.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/LU>

namespace sgeit {

namespace {

using json = nlohmann::json;

Eigen::VectorXd clamp_box(const Eigen::VectorXd& y) { return y.cwiseMax(-1.0).cwiseMin(1.0); }

double projected_gradient_norm(const Eigen::VectorXd& y, const Eigen::VectorXd& g) {
  return (y - clamp_box(y - g)).norm();
}

json to_json(const std::vector<double>& v) { return json(v); }

std::vector<double> from_json(const json& j, const char* key) {
  return j.at(key).get<std::vector<double>>();
}

// sum_i r_i Hess(r_i): central differences of the analytic Jacobian, one
// sided next to the box faces so the surrogate is never evaluated outside.
Eigen::MatrixXd residual_curvature(const Posterior& posterior, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& r) {
  const auto P = y.size();
  constexpr double h = 1e-5;
  Eigen::MatrixXd S(P, P);
  Eigen::VectorXd rp, rm;
  Eigen::MatrixXd Jp, Jm;
  for (Eigen::Index k = 0; k < P; ++k) {
    Eigen::VectorXd yp = y, ym = y;
    yp[k] = std::min(1.0, y[k] + h);
    ym[k] = std::max(-1.0, y[k] - h);
    posterior.residual({yp.data(), std::size_t(P)}, rp, &Jp);
    posterior.residual({ym.data(), std::size_t(P)}, rm, &Jm);
    S.col(k) = (Jp - Jm).transpose() * r / (yp[k] - ym[k]);
  }
  return 0.5 * (S + S.transpose());
}

// min 0.5 d^T H d + b^T d over lo <= d <= hi (lo <= 0 <= hi), H positive
// definite. Primal active-set method; the problems here have at most a few
// hundred variables.
Eigen::VectorXd box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& b, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi) {
  const auto n = b.size();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  // 0 free, -1 held at lo, +1 held at hi.
  std::vector<int> state(n, 0);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (lo[k] == 0.0 && b[k] > 0.0) state[k] = -1;
    if (hi[k] == 0.0 && b[k] < 0.0) state[k] = 1;
  }
  for (int sweep = 0; sweep < 10 * static_cast<int>(n) + 10; ++sweep) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (state[k] < 0) d[k] = lo[k];
      else if (state[k] > 0) d[k] = hi[k];
      else free.push_back(k);
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    if (nf > 0) {
      Eigen::MatrixXd Hf(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        rhs[a] = -b[free[a]];
        for (Eigen::Index c = 0; c < n; ++c)
          if (state[c] != 0) rhs[a] -= H(free[a], c) * d[c];
        for (Eigen::Index c = 0; c < nf; ++c) Hf(a, c) = H(free[a], free[c]);
      }
      const Eigen::VectorXd target = Hf.ldlt().solve(rhs);
      // Walk from the current free values towards the target until a bound.
      double t = 1.0;
      Eigen::Index blocking = -1;
      for (Eigen::Index a = 0; a < nf; ++a) {
        const double from = d[free[a]], to = target[a];
        if (to < lo[free[a]] && to < from) {
          const double s = (lo[free[a]] - from) / (to - from);
          if (s < t) t = s, blocking = a;
        } else if (to > hi[free[a]] && to > from) {
          const double s = (hi[free[a]] - from) / (to - from);
          if (s < t) t = s, blocking = a;
        }
      }
      for (Eigen::Index a = 0; a < nf; ++a) d[free[a]] += t * (target[a] - d[free[a]]);
      if (blocking >= 0) {
        const Eigen::Index k = free[blocking];
        state[k] = target[blocking] < d[k] ? -1 : 1;
        continue;
      }
    }
    // Release the held variable whose multiplier has the wrong sign.
    const Eigen::VectorXd grad = H * d + b;
    Eigen::Index worst = -1;
    double worst_value = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double violation = state[k] < 0 ? -grad[k] : state[k] > 0 ? grad[k] : 0.0;
      if (violation > worst_value) worst_value = violation, worst = k;
    }
    if (worst < 0) break;
    state[worst] = 0;
  }
  return d.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

NoiseModel NoiseModel::explicit_level(double xi_mv) {
  if (!(xi_mv > 0.0) || !std::isfinite(xi_mv)) throw InputError("noise level xi must be positive");
  return {xi_mv};
}

NoiseModel NoiseModel::percent_of_range(const Eigen::VectorXd& data, double percent) {
  if (!(percent > 0.0)) throw InputError("noise percentage must be positive");
  const double xi = percent_noise_level(data, percent);
  if (!(xi > 0.0)) throw InputError("data have zero range; the percent rule gives xi = 0");
  return {xi};
}

Eigen::VectorXd SmoothnessPrior::whiten(const Eigen::VectorXd& y_sigma) const {
  if (y_sigma.size() == 0) return y_sigma;
  return chol.matrixL().solve(y_sigma);
}

SmoothnessPrior build_prior_cov(std::span<const Vec2> seeds, double length, double eta) {
  if (!(length > 0.0)) throw InputError("correlation length must be positive");
  if (!(eta > 0.0)) throw InputError("prior standard deviation eta must be positive");
  const auto L = static_cast<Eigen::Index>(seeds.size());
  for (Eigen::Index l = 0; l < L; ++l)
    for (Eigen::Index k = 0; k < l; ++k)
      if (seeds[l] == seeds[k])
        throw InputError("prior covariance is singular: seeds " + std::to_string(k + 1) + " and " +
                         std::to_string(l + 1) + " coincide");
  SmoothnessPrior prior;
  prior.length = length;
  prior.eta = eta;
  prior.seeds.assign(seeds.begin(), seeds.end());
  prior.cov.resize(L, L);
  const double eta2 = eta * eta;
  for (Eigen::Index l = 0; l < L; ++l)
    for (Eigen::Index k = 0; k < L; ++k)
      prior.cov(l, k) = eta2 * std::exp(-(seeds[l] - seeds[k]).squaredNorm() / (2.0 * length * length));
  if (L == 0) return prior;
  prior.chol.compute(prior.cov);
  if (prior.chol.info() != Eigen::Success || prior.chol.rcond() < 1e-14) {
    prior.cov.diagonal().array() += 1e-10 * eta2;
    prior.jittered = true;
    prior.chol.compute(prior.cov);
    if (prior.chol.info() != Eigen::Success)
      throw InputError("prior covariance is not positive definite even after jitter");
  }
  return prior;
}

Posterior::Posterior(Surrogate surrogate, Eigen::VectorXd data, NoiseModel noise,
                     SmoothnessPrior prior)
    : surrogate_(std::move(surrogate)),
      data_(std::move(data)),
      noise_(noise),
      prior_(std::move(prior)) {
  if (data_.size() != surrogate_.stacked_size())
    throw InputError("data hold " + std::to_string(data_.size()) + " voltages, the surrogate " +
                     std::to_string(surrogate_.stacked_size()));
  if (!(noise_.xi > 0.0)) throw InputError("noise level xi must be positive");
  if (prior_.size() != surrogate_.num_pixels())
    throw InputError("prior size differs from the number of pixels");
  const int L = prior_.size();
  prior_whitener_ = L ? Eigen::MatrixXd(prior_.chol.matrixL().solve(Eigen::MatrixXd::Identity(L, L)))
                      : Eigen::MatrixXd(0, 0);
}

void Posterior::residual(std::span<const double> y, Eigen::VectorXd& r,
                         Eigen::MatrixXd* jacobian) const {
  const int L = surrogate_.num_pixels();
  const auto n = data_.size();
  Eigen::VectorXd u;
  Eigen::MatrixXd ju;
  surrogate_.evaluate(y, u, jacobian ? &ju : nullptr);
  const Eigen::Map<const Eigen::VectorXd> ys(y.data(), L);
  r.resize(residual_size());
  r.head(n) = (data_ - u) / noise_.xi;
  r.tail(L) = prior_whitener_ * ys;
  if (!jacobian) return;
  jacobian->setZero(residual_size(), dimension());
  jacobian->topRows(n) = -ju / noise_.xi;
  jacobian->bottomLeftCorner(L, L) = prior_whitener_;
}

double Posterior::objective(std::span<const double> y) const {
  if (static_cast<int>(y.size()) != dimension())
    throw InputError("parameter vector length differs from the posterior dimension");
  if (!in_hypercube(y)) return kOutsideSupport;
  Eigen::VectorXd r;
  residual(y, r, nullptr);
  return r.squaredNorm();
}

double Posterior::neg_log(std::span<const double> y) const {
  const double f = objective(y);
  return std::isfinite(f) ? 0.5 * f : kOutsideSupport;
}

Eigen::VectorXd data_for_surrogate(const Surrogate& surrogate, const MeasurementSet& data) {
  if (static_cast<int>(data.patterns.size()) != surrogate.num_patterns())
    throw InputError("data hold " + std::to_string(data.patterns.size()) +
                     " current patterns, the surrogate " + std::to_string(surrogate.num_patterns()));
  for (int p = 0; p < surrogate.num_patterns(); ++p) {
    const auto& ref = surrogate.currents()[p];
    if (data.patterns[p].size() != ref.size() || data.voltages[p].size() != ref.size())
      throw InputError("data electrode count differs from the surrogate's M = " +
                       std::to_string(ref.size()));
    if ((data.patterns[p] - ref).norm() > 1e-9 * std::max(1.0, ref.norm()))
      throw InputError("current pattern " + std::to_string(p + 1) +
                       " of the data differs from the surrogate's");
  }
  return data.stacked();
}

MapResult map_estimate(const Posterior& posterior, std::span<const double> start,
                       const MapOptions& options) {
  const int P = posterior.dimension();
  if (static_cast<int>(start.size()) != P) throw InputError("MAP start has the wrong length");
  if (!in_hypercube(start)) throw InputError("MAP start must lie in the parameter hypercube");

  MapResult out;
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(start.data(), P);
  Eigen::VectorXd r, trial_r;
  Eigen::MatrixXd J;
  posterior.residual({y.data(), std::size_t(P)}, r, &J);
  double F = r.squaredNorm();
  double lambda = 0.0;

  for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
    const Eigen::VectorXd g = 2.0 * J.transpose() * r;
    out.projected_gradient = projected_gradient_norm(y, g);
    if (out.projected_gradient <= options.gradient_tol * (1.0 + std::abs(F))) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd H = J.transpose() * J;
    if (options.second_order) H += residual_curvature(posterior, y, r);
    const Eigen::VectorXd b = J.transpose() * r;
    const double scale = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    const Eigen::VectorXd lo = -Eigen::VectorXd::Ones(P) - y, hi = Eigen::VectorXd::Ones(P) - y;

    bool accepted = false;
    while (!accepted && lambda <= 1e10 * scale) {
      Eigen::MatrixXd damped = H;
      damped.diagonal().array() += lambda;
      if (Eigen::LLT<Eigen::MatrixXd>(damped).info() != Eigen::Success) {
        lambda = std::max(10.0 * lambda, 1e-10 * scale);
        continue;
      }
      // The damped Gauss-Newton model restricted to the box; d is feasible.
      const Eigen::VectorXd d = box_qp(damped, b, lo, hi);
      for (double t = 1.0; t > 1e-4; t *= 0.5) {
        const Eigen::VectorXd trial = clamp_box(y + t * d);
        posterior.residual({trial.data(), std::size_t(P)}, trial_r, nullptr);
        const double trial_F = trial_r.squaredNorm();
        if (trial_F <= F + 1e-4 * g.dot(trial - y) && trial_F < F) {
          y = trial;
          accepted = true;
          break;
        }
      }
      if (!accepted) lambda = std::max(10.0 * lambda, 1e-10 * scale);
    }
    if (!accepted) break;  // no descent left at machine precision
    lambda = lambda < 1e-12 * scale ? 0.0 : lambda / 10.0;
    posterior.residual({y.data(), std::size_t(P)}, r, &J);
    F = r.squaredNorm();
  }
  if (!out.converged) {
    const Eigen::VectorXd g = 2.0 * J.transpose() * r;
    out.projected_gradient = projected_gradient_norm(y, g);
    out.converged = out.projected_gradient <= options.gradient_tol * (1.0 + std::abs(F));
  }
  out.y = y;
  out.objective = F;
  return out;
}

MapResult map_estimate(const Posterior& posterior, const MapOptions& options) {
  const std::vector<double> zero(posterior.dimension(), 0.0);
  return map_estimate(posterior, zero, options);
}

Chain mcmc_sample(const Posterior& posterior, const McmcConfig& config,
                  std::span<const double> start) {
  if (static_cast<int>(start.size()) != posterior.dimension())
    throw InputError("chain start has the wrong length");
  if (!(config.proposal_std > 0.0)) throw InputError("proposal standard deviation must be positive");
  if (config.n_samples == 0) throw InputError("the chain needs at least one retained sample");
  return metropolis([&](std::span<const double> y) { return posterior.neg_log(y); }, start, config);
}

Estimates map_estimates(const MapResult& map, const ParameterModel& model) {
  Estimates e;
  e.y_map = clamp_box(map.y);
  e.map_objective = map.objective;
  e.map_iterations = map.iterations;
  e.map_converged = map.converged;
  const int L = model.num_pixels();
  for (int l = 0; l < L; ++l) e.sigma_map.push_back(model.pixel_value(l, e.y_map[l]));
  for (int m = 0; m < model.num_electrodes(); ++m)
    e.zeta_map.push_back(model.contact_value(m, e.y_map[L + m]));
  if (!map.converged)
    e.warnings.push_back("MAP iteration stopped before the projected-gradient tolerance");
  return e;
}

void cm_sd_estimates(const Chain& chain, const ParameterModel& model, Estimates& out) {
  const std::size_t n = chain.size();
  const int P = model.dimension();
  if (n == 0) throw InputError("cannot form estimates from an empty chain");
  if (chain.dimension != P) throw InputError("chain dimension differs from the parameter model");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(P), half_mean = Eigen::VectorXd::Zero(P);
  const std::size_t half = std::max<std::size_t>(n / 2, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = chain.sample(i);
    for (int k = 0; k < P; ++k) {
      mean[k] += s[k];
      if (i < half) half_mean[k] += s[k];
    }
  }
  mean /= static_cast<double>(n);
  half_mean /= static_cast<double>(half);
  Eigen::VectorXd var = Eigen::VectorXd::Zero(P);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = chain.sample(i);
    for (int k = 0; k < P; ++k) var[k] += (s[k] - mean[k]) * (s[k] - mean[k]);
  }
  var /= static_cast<double>(n);
  mean = clamp_box(mean);
  half_mean = clamp_box(half_mean);
  const Eigen::VectorXd sd = var.cwiseMax(0.0).cwiseSqrt().cwiseMin(1.0);

  const int L = model.num_pixels();
  out.sigma_cm.clear();
  out.sigma_sd.clear();
  out.zeta_cm.clear();
  out.zeta_sd.clear();
  double stabilization = 0.0;
  auto track = [&](double full, double partial) {
    stabilization = std::max(stabilization, std::abs(full - partial) / std::abs(full));
  };
  for (int l = 0; l < L; ++l) {
    out.sigma_cm.push_back(model.pixel_value(l, mean[l]));
    out.sigma_sd.push_back(model.sigma[l] * sd[l]);
    track(out.sigma_cm.back(), model.pixel_value(l, half_mean[l]));
  }
  for (int m = 0; m < model.num_electrodes(); ++m) {
    out.zeta_cm.push_back(model.contact_value(m, mean[L + m]));
    out.zeta_sd.push_back(model.contact_half_range(m) * sd[L + m]);
    track(out.zeta_cm.back(), model.contact_value(m, half_mean[L + m]));
  }
  out.has_chain = true;
  out.acceptance = chain.acceptance;
  out.n = n;
  out.stabilization = stabilization;
  if (!chain.warning.empty()) out.warnings.push_back(chain.warning);
  if (stabilization >= 0.01)
    out.warnings.push_back("CM estimate has not stabilized: half-chain relative change " +
                           std::to_string(stabilization) + " >= 0.01");
}

json estimates_to_json(const Estimates& e) {
  json j;
  j["y_map"] = std::vector<double>(e.y_map.data(), e.y_map.data() + e.y_map.size());
  j["sigma_map"] = to_json(e.sigma_map);
  j["zeta_map"] = to_json(e.zeta_map);
  json diag = {{"map_objective", e.map_objective},
               {"map_iterations", e.map_iterations},
               {"map_converged", e.map_converged}};
  if (e.has_chain) {
    j["sigma_cm"] = to_json(e.sigma_cm);
    j["sigma_sd"] = to_json(e.sigma_sd);
    j["zeta_cm"] = to_json(e.zeta_cm);
    j["zeta_sd"] = to_json(e.zeta_sd);
    diag["acceptance"] = e.acceptance;
    diag["n"] = e.n;
    diag["stabilization"] = e.stabilization;
  }
  diag["warnings"] = e.warnings;
  j["diagnostics"] = std::move(diag);
  return j;
}

Estimates estimates_from_json(const json& j) {
  Estimates e;
  try {
    const auto y = from_json(j, "y_map");
    e.y_map = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
    e.sigma_map = from_json(j, "sigma_map");
    e.zeta_map = from_json(j, "zeta_map");
    if (j.contains("sigma_cm")) {
      e.has_chain = true;
      e.sigma_cm = from_json(j, "sigma_cm");
      e.sigma_sd = from_json(j, "sigma_sd");
      e.zeta_cm = from_json(j, "zeta_cm");
      e.zeta_sd = from_json(j, "zeta_sd");
    }
    if (j.contains("diagnostics")) {
      const auto& d = j.at("diagnostics");
      e.map_objective = d.value("map_objective", 0.0);
      e.map_iterations = d.value("map_iterations", 0);
      e.map_converged = d.value("map_converged", false);
      e.acceptance = d.value("acceptance", 0.0);
      e.n = d.value("n", std::size_t{0});
      e.stabilization = d.value("stabilization", 0.0);
      e.warnings = d.value("warnings", std::vector<std::string>{});
    }
  } catch (const json::exception& ex) {
    throw InputError(std::string("estimates parse error: ") + ex.what());
  }
  return e;
}

void save_estimates(const Estimates& e, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << estimates_to_json(e).dump(2) << "\n";
}

Estimates load_estimates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return estimates_from_json(json::parse(in));
  } catch (const json::exception& ex) {
    throw InputError(path.string() + ": " + ex.what());
  }
}

}  // namespace sgeit
