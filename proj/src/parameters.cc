#include "sgeit/parameters.h"

#include <cmath>
#include <string>

#include "sgeit/error.h"

namespace sgeit {

void ParameterModel::validate() const {
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0))
    throw InputError("background conductivity sigma0 must be positive");
  for (int l = 0; l < num_pixels(); ++l)
    if (!(sigma[l] >= 0.0 && sigma[l] < sigma0))
      throw InputError("pixel " + std::to_string(l + 1) +
                       ": amplitude must satisfy 0 <= sigma_l < sigma0");
  validate_contact_bounds(contact);
  if (!seeds.empty() && static_cast<int>(seeds.size()) != num_pixels())
    throw InputError("seed count differs from the pixel count");
}

ParameterModel ParameterModel::uniform(std::vector<Vec2> seeds, int num_electrodes,
                                       double sigma0, double dsigma, double zeta_min,
                                       double zeta_max) {
  ParameterModel model;
  model.sigma0 = sigma0;
  model.sigma.assign(seeds.size(), dsigma);
  model.contact = ContactBounds::uniform(num_electrodes, zeta_min, zeta_max);
  model.seeds = std::move(seeds);
  model.validate();
  return model;
}

bool in_hypercube(std::span<const double> y) {
  for (double v : y)
    if (!(v >= -1.0 && v <= 1.0)) return false;
  return true;
}

}  // namespace sgeit
