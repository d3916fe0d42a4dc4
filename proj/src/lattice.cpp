#include "soslab/lattice.hpp"

#include <cstdlib>

namespace soslab {

namespace {
bool odd(i64 v) { return (v % 2) != 0; }
}  // namespace

DualPoint make_dual(i64 x2, i64 y2) {
  if (!odd(x2) || !odd(y2)) throw LatticeError("dual point must have half-integer coordinates");
  return {x2, y2};
}

bool is_valid_bond(const DualBond& e) {
  if (!odd(e.a.x2) || !odd(e.a.y2) || !odd(e.b.x2) || !odd(e.b.y2)) return false;
  const i64 dx = std::llabs(e.a.x2 - e.b.x2);
  const i64 dy = std::llabs(e.a.y2 - e.b.y2);
  return (dx == 2 && dy == 0) || (dx == 0 && dy == 2);
}

bool same_bond(const DualBond& e, const DualBond& f) {
  return (e.a == f.a && e.b == f.b) || (e.a == f.b && e.b == f.a);
}

Box::Box(i64 w, i64 h, Site o) : width(w), height(h), origin(o) {
  if (w < 1 || h < 1) throw LatticeError("box dimensions must be positive");
}

Cone::Cone(ConeKind k, Rational d) : kind(k), aperture(d) {
  if (d.den <= 0 || d.num <= 0 || d.num > d.den) throw LatticeError("cone aperture must lie in (0,1]");
}

bool in_cone(const Site& apex, const Site& p, const Cone& cone) {
  i64 x = p.x - apex.x;
  const i64 y = p.y - apex.y;
  if (cone.kind == ConeKind::backward) x = -x;
  // |y| <= (num/den) x  <=>  den*|y| <= num*x
  return cone.aperture.den * std::llabs(y) <= cone.aperture.num * x;
}

Site dual_origin_map(const DualPoint& p) {
  if (!odd(p.x2) || !odd(p.y2)) throw LatticeError("dual point must have half-integer coordinates");
  return {(p.x2 - 1) / 2, (p.y2 - 1) / 2};
}

DualPoint dual_origin_inverse(const Site& s) { return {2 * s.x + 1, 2 * s.y + 1}; }

std::string to_string(const Site& s) { return "(" + std::to_string(s.x) + "," + std::to_string(s.y) + ")"; }

}  // namespace soslab
