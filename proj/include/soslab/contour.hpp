#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "soslab/lattice.hpp"
#include "soslab/sos.hpp"

namespace soslab {

// Dual-lattice path. For a closed contour the last vertex repeats the first.
struct Contour {
  std::vector<DualPoint> vertices;
  bool open = true;

  std::size_t length() const { return vertices.empty() ? 0 : vertices.size() - 1; }
  std::vector<DualBond> bonds() const;
};

class AmbiguityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Contour translate(const Contour& c, const Site& v);

// All h-level lines of the field, split at degree-4 vertices by the northeast rule.
// Bonds are oriented with the sites of height >= h on the left.
std::vector<Contour> extract_level_lines(const HeightField& field, int h);

// Number of dual bonds separating heights < h from heights >= h.
std::size_t count_separating_bonds(const HeightField& field, int h);

// The unique open contour; the level defaults to 1 for 0,1,1,1 and h_high for legs.
Contour open_one_contour(const HeightField& field, std::optional<int> level = std::nullopt);

// Column x is visited by the horizontal bonds spanning [x-1/2, x+1/2]; rho is the
// height of such a bond above base_y2 (doubled), in lattice units.
struct DisplacementProfile {
  i64 x_min = 0;
  i64 x_max = -1;
  std::vector<char> defined;
  std::vector<i64> rho_min;
  std::vector<i64> rho_max;

  bool visits(i64 x) const { return x >= x_min && x <= x_max && defined[static_cast<std::size_t>(x - x_min)]; }
  i64 min_at(i64 x) const { return rho_min[static_cast<std::size_t>(x - x_min)]; }
  i64 max_at(i64 x) const { return rho_max[static_cast<std::size_t>(x - x_min)]; }
  // Minimum of rho_min over visited columns in [a, b]; nullopt if none visited.
  std::optional<i64> min_over(i64 a, i64 b) const;
};

// base_y2 defaults to the first vertex.
DisplacementProfile displacement_profile(const Contour& c, std::optional<i64> base_y2 = std::nullopt);

// Winding number of the contour around a primal site (closed contours).
int winding(const Contour& c, const Site& s);
// Sites strictly below an open contour and above base_y2, counted with the shoelace rule.
i64 area_below(const Contour& c, std::optional<i64> base_y2 = std::nullopt);

// Contour vertices shifted by -(1/2,1/2) onto Z^2.
std::vector<Site> to_path(const Contour& c);
Contour from_path(const std::vector<Site>& path);

// One line per bond, "x1 y1 x2 y2" in doubled coordinates.
void write_contour(std::ostream& os, const Contour& c);
Contour read_contour(std::istream& is);

}  // namespace soslab
