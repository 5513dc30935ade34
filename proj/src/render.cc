#include "sgeit/render.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sgeit/error.h"

namespace sgeit {

namespace {

constexpr double kCanvas = 480.0;
constexpr double kMargin = 20.0;
constexpr double kBarWidth = 24.0;

// Anchor colors sampled from viridis at t = 0, 0.25, 0.5, 0.75, 1.
constexpr std::array<std::array<double, 3>, 5> kAnchors{{
    {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string hex(const std::array<int, 3>& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<double> select_field(const Estimates& e, const std::string& field) {
  if (field == "sigma_map") return e.sigma_map;
  if (field == "sigma_cm" || field == "sigma_sd") {
    if (!e.has_chain) throw InputError("estimates carry no chain; '" + field + "' is unavailable");
    return field == "sigma_cm" ? e.sigma_cm : e.sigma_sd;
  }
  throw InputError("unknown field '" + field + "' (expected sigma_map, sigma_cm or sigma_sd)");
}

std::array<int, 3> colormap(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  const double x = t * (kAnchors.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(x), kAnchors.size() - 2);
  const double f = x - static_cast<double>(i);
  std::array<int, 3> c{};
  for (int k = 0; k < 3; ++k)
    c[k] = static_cast<int>(std::lround(kAnchors[i][k] + f * (kAnchors[i + 1][k] - kAnchors[i][k])));
  return c;
}

std::string render_svg(const Mesh& mesh, const PixelPartition& partition,
                       std::span<const double> values, const std::string& title) {
  if (static_cast<int>(values.size()) != partition.num_pixels())
    throw InputError("field has " + std::to_string(values.size()) + " values for " +
                     std::to_string(partition.num_pixels()) + " pixels");
  if (static_cast<int>(partition.triangle_to_pixel.size()) != mesh.num_triangles())
    throw InputError("pixel partition does not match the mesh");
  if (mesh.nodes.empty()) throw InputError("mesh has no nodes");

  Vec2 lo = mesh.nodes.front(), hi = mesh.nodes.front();
  for (const auto& p : mesh.nodes) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-12});
  const double scale = (kCanvas - 2 * kMargin) / extent;
  auto px = [&](const Vec2& p) {
    return fmt(kMargin + (p.x() - lo.x()) * scale) + "," + fmt(kCanvas - kMargin - (p.y() - lo.y()) * scale);
  };

  const double vmin = *std::min_element(values.begin(), values.end());
  const double vmax = *std::max_element(values.begin(), values.end());
  auto color_of = [&](double v) { return hex(colormap(vmax > vmin ? (v - vmin) / (vmax - vmin) : 0.0)); };

  const double width = kCanvas + 3 * kMargin + kBarWidth + 80.0;
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width, "%.0f") + "\" height=\"" +
         fmt(kCanvas + 2 * kMargin, "%.0f") + "\" viewBox=\"0 0 " + fmt(width, "%.0f") + " " +
         fmt(kCanvas + 2 * kMargin, "%.0f") + "\">\n";
  svg += "<title>" + escape(title) + "</title>\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  svg += "<g id=\"pixels\">\n";
  const auto owned = partition.pixel_triangles();
  for (int l = 0; l < partition.num_pixels(); ++l) {
    const std::string c = color_of(values[l]);
    svg += "<path id=\"pixel-" + std::to_string(l + 1) + "\" fill=\"" + c + "\" stroke=\"" + c +
           "\" stroke-width=\"0.5\" stroke-linejoin=\"round\" data-value=\"" + fmt(values[l], "%.17g") +
           "\" d=\"";
    for (int t : owned[l]) {
      const auto& tri = mesh.triangles[t];
      svg += "M" + px(mesh.nodes[tri[0]]) + "L" + px(mesh.nodes[tri[1]]) + "L" + px(mesh.nodes[tri[2]]) + "Z";
    }
    svg += "\"/>\n";
  }
  svg += "</g>\n";

  // Colour bar, maximum at the top.
  const double x0 = kCanvas + kMargin;
  const double top = kMargin, height = kCanvas - 2 * kMargin;
  const int stripes = 64;
  svg += "<g id=\"scale\">\n";
  for (int k = 0; k < stripes; ++k) {
    const double t = 1.0 - (k + 0.5) / stripes;
    svg += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(top + k * height / stripes) + "\" width=\"" +
           fmt(kBarWidth) + "\" height=\"" + fmt(height / stripes + 0.2) + "\" fill=\"" +
           hex(colormap(vmax > vmin ? t : 0.0)) + "\"/>\n";
  }
  svg += "<text id=\"scale-max\" x=\"" + fmt(x0 + kBarWidth + 6) + "\" y=\"" + fmt(top + 5) +
         "\" font-family=\"sans-serif\" font-size=\"12\">" + fmt(vmax, "%.6g") + "</text>\n";
  svg += "<text id=\"scale-min\" x=\"" + fmt(x0 + kBarWidth + 6) + "\" y=\"" + fmt(top + height + 5) +
         "\" font-family=\"sans-serif\" font-size=\"12\">" + fmt(vmin, "%.6g") + "</text>\n";
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace sgeit
