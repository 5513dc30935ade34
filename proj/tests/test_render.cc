#include <regex>
#include <set>

#include <doctest.h>

#include "sgeit/error.h"
#include "sgeit/render.h"

using namespace sgeit;

namespace {

struct Scene {
  Mesh mesh = make_disk_fixture(4, 32, 8, 0.5);
  PixelPartition partition;
  Scene() {
    const std::vector<int> counts{3, 9};
    const std::vector<double> radii{0.35, 0.75};
    partition = assign_pixels(mesh, ring_seeds(counts, radii));
  }
};

std::set<std::string> pixel_fills(const std::string& svg) {
  std::set<std::string> fills;
  const std::regex re("<path id=\"pixel-[0-9]+\" fill=\"(#[0-9a-f]{6})\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    fills.insert((*it)[1]);
  return fills;
}

std::string text_of(const std::string& svg, const std::string& id) {
  std::smatch m;
  const std::regex re("<text id=\"" + id + "\"[^>]*>([^<]*)</text>");
  REQUIRE(std::regex_search(svg, m, re));
  return m[1];
}

}  // namespace

TEST_CASE("uniform field renders in a single colour") {
  const Scene s;
  const std::vector<double> v(12, 0.07);
  const std::string svg = render_svg(s.mesh, s.partition, v, "sigma_sd");
  const auto fills = pixel_fills(svg);
  CHECK(fills.size() == 1);
  CHECK(text_of(svg, "scale-min") == text_of(svg, "scale-max"));
}

TEST_CASE("scale endpoints are the field extremes") {
  const Scene s;
  std::vector<double> v(12);
  for (int l = 0; l < 12; ++l) v[l] = 0.2 + 0.15 * l;
  v[5] = 0.25;
  const std::string svg = render_svg(s.mesh, s.partition, v, "sigma_map");
  CHECK(std::stod(text_of(svg, "scale-min")) == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(std::stod(text_of(svg, "scale-max")) == doctest::Approx(0.2 + 0.15 * 11).epsilon(1e-6));
  CHECK(pixel_fills(svg).size() > 1);
  // Extremes take the colormap ends.
  const auto lo = colormap(0.0), hi = colormap(1.0);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", lo[0], lo[1], lo[2]);
  CHECK(svg.find("id=\"pixel-1\" fill=\"" + std::string(buf)) != std::string::npos);
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", hi[0], hi[1], hi[2]);
  CHECK(svg.find("id=\"pixel-12\" fill=\"" + std::string(buf)) != std::string::npos);
}

TEST_CASE("rendering is deterministic") {
  const Scene s;
  std::vector<double> v(12);
  for (int l = 0; l < 12; ++l) v[l] = std::sin(l + 0.5);
  CHECK(render_svg(s.mesh, s.partition, v, "x") == render_svg(s.mesh, s.partition, v, "x"));
}

TEST_CASE("colormap endpoints and range") {
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0, -1.0, 2.0})
    for (int c : colormap(t)) CHECK((c >= 0 && c <= 255));
  CHECK(colormap(-1.0) == colormap(0.0));
  CHECK(colormap(2.0) == colormap(1.0));
  CHECK(colormap(0.0) != colormap(1.0));
}

TEST_CASE("field selection") {
  Estimates e;
  e.sigma_map = {1.0, 2.0};
  CHECK(select_field(e, "sigma_map") == e.sigma_map);
  CHECK_THROWS_AS(select_field(e, "sigma_cm"), InputError);
  CHECK_THROWS_AS(select_field(e, "zeta_map"), InputError);
  e.has_chain = true;
  e.sigma_cm = {1.5, 1.6};
  e.sigma_sd = {0.1, 0.2};
  CHECK(select_field(e, "sigma_cm") == e.sigma_cm);
  CHECK(select_field(e, "sigma_sd") == e.sigma_sd);
}
