#ifndef SGEIT_RENDER_H_
#define SGEIT_RENDER_H_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "sgeit/geometry.h"
#include "sgeit/inversion.h"

namespace sgeit {

/// Pixel values of "sigma_map", "sigma_cm" or "sigma_sd". Throws InputError on
/// any other selector or when the chain fields are absent.
std::vector<double> select_field(const Estimates& estimates, const std::string& field);

/// Viridis-like colormap sampled at t in [0, 1], as 8-bit RGB.
std::array<int, 3> colormap(double t);

/// Flat-shaded SVG: one path per pixel (the union of its triangles) and a
/// color bar whose end labels are the minimum and maximum of the field.
std::string render_svg(const Mesh& mesh, const PixelPartition& partition,
                       std::span<const double> pixel_values, const std::string& title);

}  // namespace sgeit

#endif  // SGEIT_RENDER_H_
