#ifndef SGEIT_PARAMETERS_H_
#define SGEIT_PARAMETERS_H_

#include <span>
#include <vector>

#include "sgeit/geometry.h"
#include "sgeit/sgfem.h"

namespace sgeit {

/// Affine maps from the parameter hypercube [-1, 1]^(L+M) to physical values:
/// pixel l has conductivity sigma0 + sigma[l] y_l (mS) and electrode m has
/// contact conductance (a_m + b_m)/2 + (b_m - a_m)/2 y_{L+m} (mS/cm).
struct ParameterModel {
  double sigma0 = 1.1;
  std::vector<double> sigma;
  ContactBounds contact;
  std::vector<Vec2> seeds;  // pixel centers r_l (cm)

  int num_pixels() const { return static_cast<int>(sigma.size()); }
  int num_electrodes() const { return contact.size(); }
  int dimension() const { return num_pixels() + num_electrodes(); }

  double pixel_value(int l, double y) const { return sigma0 + sigma[l] * y; }
  double contact_value(int m, double y) const {
    return 0.5 * (contact.a[m] + contact.b[m]) + 0.5 * (contact.b[m] - contact.a[m]) * y;
  }
  double contact_half_range(int m) const { return 0.5 * (contact.b[m] - contact.a[m]); }

  /// Throws InputError on inconsistent sizes or bounds violating
  /// 0 <= sigma_l < sigma0 and 0 < a_m <= b_m.
  void validate() const;

  static ParameterModel uniform(std::vector<Vec2> seeds, int num_electrodes, double sigma0,
                                double dsigma, double zeta_min, double zeta_max);
};

/// True when every coordinate lies in [-1, 1].
bool in_hypercube(std::span<const double> y);

}  // namespace sgeit

#endif  // SGEIT_PARAMETERS_H_
