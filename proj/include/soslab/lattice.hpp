#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace soslab {

using i64 = std::int64_t;

struct Site {
  i64 x = 0;
  i64 y = 0;

  friend bool operator==(const Site&, const Site&) = default;
  friend auto operator<=>(const Site&, const Site&) = default;
  Site operator+(const Site& o) const { return {x + o.x, y + o.y}; }
  Site operator-(const Site& o) const { return {x - o.x, y - o.y}; }
  Site operator-() const { return {-x, -y}; }
};

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(s.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(s.y) + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Point of the dual lattice Z^2 + (1/2,1/2), stored doubled: (x2, y2) = (2x, 2y),
// so both components are odd.
struct DualPoint {
  i64 x2 = 1;
  i64 y2 = 1;

  friend bool operator==(const DualPoint&, const DualPoint&) = default;
  friend auto operator<=>(const DualPoint&, const DualPoint&) = default;
};

class LatticeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

DualPoint make_dual(i64 x2, i64 y2);  // throws unless both odd

struct DualBond {
  DualPoint a;
  DualPoint b;

  friend bool operator==(const DualBond&, const DualBond&) = default;
};

bool is_valid_bond(const DualBond& e);
// Same bond regardless of orientation.
bool same_bond(const DualBond& e, const DualBond& f);

struct Box {
  i64 width = 1;
  i64 height = 1;
  Site origin{1, 1};  // lower-left site

  Box() = default;
  Box(i64 w, i64 h, Site o = {1, 1});
  bool contains(const Site& s) const {
    return s.x >= origin.x && s.x < origin.x + width && s.y >= origin.y && s.y < origin.y + height;
  }
  i64 area() const { return width * height; }
};

struct Rational {
  i64 num = 1;
  i64 den = 1;
};

enum class ConeKind { forward, backward };

struct Cone {
  ConeKind kind = ConeKind::forward;
  Rational aperture{1, 1};

  Cone() = default;
  Cone(ConeKind k, Rational d = {1, 1});
};

// p - apex in the forward cone |y| <= delta*x, or in its negation.
bool in_cone(const Site& apex, const Site& p, const Cone& cone);

inline Site translate(const Site& s, const Site& v) { return s + v; }
inline DualPoint translate(const DualPoint& p, const Site& v) { return {p.x2 + 2 * v.x, p.y2 + 2 * v.y}; }
inline DualBond translate(const DualBond& e, const Site& v) { return {translate(e.a, v), translate(e.b, v)}; }

// Subtracts (1/2,1/2): the dual origin (1/2,1/2) goes to (0,0).
Site dual_origin_map(const DualPoint& p);
DualPoint dual_origin_inverse(const Site& s);

std::string to_string(const Site& s);

}  // namespace soslab
