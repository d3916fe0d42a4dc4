#include "soslab/contour.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

namespace soslab {

std::vector<DualBond> Contour::bonds() const {
  std::vector<DualBond> out;
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i) out.push_back({vertices[i], vertices[i + 1]});
  return out;
}

Contour translate(const Contour& c, const Site& v) {
  Contour t = c;
  for (DualPoint& p : t.vertices) p = translate(p, v);
  return t;
}

namespace {

struct DualHash {
  std::size_t operator()(const DualPoint& p) const noexcept { return SiteHash{}({p.x2, p.y2}); }
};

// Directions E, N, W, S in doubled units.
constexpr i64 kDx[4] = {2, 0, -2, 0};
constexpr i64 kDy[4] = {0, 2, 0, -2};
// Northeast rule: sides {N,W} and {E,S} are paired.
constexpr int kPartner[4] = {3, 2, 1, 0};

int dir_of(i64 dx, i64 dy) {
  if (dx > 0) return 0;
  if (dy > 0) return 1;
  if (dx < 0) return 2;
  return 3;
}

struct OrientedBond {
  DualPoint from, to;
  int dir;
};

template <class F>
void for_each_separating(const HeightField& f, int h, F&& fn) {
  const Box& b = f.box();
  auto consider = [&](const Site& a, const Site& c) {
    const int ha = f.at(a), hc = f.at(c);
    Site low, high;
    if (ha < h && hc >= h) {
      low = a;
      high = c;
    } else if (hc < h && ha >= h) {
      low = c;
      high = a;
    } else {
      return;
    }
    const Site n = high - low;
    const i64 dx = n.y, dy = -n.x;  // high side on the left
    const i64 mx = a.x + c.x, my = a.y + c.y;
    fn(OrientedBond{{mx - dx, my - dy}, {mx + dx, my + dy}, dir_of(dx, dy)});
  };
  for (i64 y = b.origin.y; y < b.origin.y + b.height; ++y)
    for (i64 x = b.origin.x; x < b.origin.x + b.width; ++x) {
      const Site s{x, y};
      consider(s, {x + 1, y});
      consider(s, {x, y + 1});
      if (x == b.origin.x) consider(s, {x - 1, y});
      if (y == b.origin.y) consider(s, {x, y - 1});
    }
}

}  // namespace

std::size_t count_separating_bonds(const HeightField& field, int h) {
  std::size_t n = 0;
  for_each_separating(field, h, [&](const OrientedBond&) { ++n; });
  return n;
}

std::vector<Contour> extract_level_lines(const HeightField& field, int h) {
  if (field.floor() && h < 1) throw std::invalid_argument("level must be >= 1 with a floor");
  std::vector<OrientedBond> bonds;
  for_each_separating(field, h, [&](const OrientedBond& e) { bonds.push_back(e); });
  std::unordered_map<DualPoint, std::vector<std::size_t>, DualHash> out;
  std::unordered_map<DualPoint, int, DualHash> balance;
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    out[bonds[i].from].push_back(i);
    balance[bonds[i].from] += 1;
    balance[bonds[i].to] -= 1;
  }
  std::vector<char> used(bonds.size(), 0);

  auto next_bond = [&](std::size_t i) -> std::optional<std::size_t> {
    auto it = out.find(bonds[i].to);
    if (it == out.end()) return std::nullopt;
    const auto& cand = it->second;
    if (cand.size() == 1) return used[cand[0]] ? std::nullopt : std::optional<std::size_t>(cand[0]);
    const int arrival_side = (bonds[i].dir + 2) % 4;
    const int want = kPartner[arrival_side];
    for (std::size_t j : cand)
      if (bonds[j].dir == want && !used[j]) return j;
    return std::nullopt;
  };

  auto trace = [&](std::size_t start) {
    Contour c;
    c.vertices.push_back(bonds[start].from);
    std::optional<std::size_t> cur = start;
    while (cur && !used[*cur]) {
      used[*cur] = 1;
      c.vertices.push_back(bonds[*cur].to);
      cur = next_bond(*cur);
    }
    c.open = !(c.vertices.front() == c.vertices.back());
    return c;
  };

  // Open contours start at vertices with surplus out-degree; deterministic order.
  std::vector<DualPoint> starts;
  for (const auto& [p, bal] : balance)
    if (bal > 0) starts.push_back(p);
  std::sort(starts.begin(), starts.end());
  std::vector<Contour> result;
  for (const DualPoint& p : starts)
    for (std::size_t i : out[p])
      if (!used[i]) result.push_back(trace(i));
  std::vector<std::size_t> order(bonds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return bonds[a].from < bonds[b].from; });
  for (std::size_t i : order)
    if (!used[i]) result.push_back(trace(i));
  return result;
}

Contour open_one_contour(const HeightField& field, std::optional<int> level) {
  int h = 1;
  if (level) {
    h = *level;
  } else if (field.boundary().kind == BoundaryCondition::Kind::legs) {
    h = field.boundary().h_high;
  } else if (field.boundary().kind != BoundaryCondition::Kind::dobrushin_0111) {
    throw AmbiguityError("boundary condition induces no open contour");
  }
  std::vector<Contour> open;
  for (auto& c : extract_level_lines(field, h))
    if (c.open) open.push_back(std::move(c));
  if (open.size() != 1)
    throw AmbiguityError("expected exactly one open contour, found " + std::to_string(open.size()));
  return open[0];
}

std::optional<i64> DisplacementProfile::min_over(i64 a, i64 b) const {
  std::optional<i64> m;
  for (i64 x = std::max(a, x_min); x <= std::min(b, x_max); ++x)
    if (visits(x)) m = m ? std::min(*m, min_at(x)) : min_at(x);
  return m;
}

DisplacementProfile displacement_profile(const Contour& c, std::optional<i64> base_y2) {
  if (c.vertices.size() < 2) throw std::invalid_argument("empty contour");
  const i64 base = base_y2.value_or(c.vertices.front().y2);
  DisplacementProfile p;
  i64 lo = c.vertices[0].x2, hi = lo;
  for (const auto& v : c.vertices) {
    lo = std::min(lo, v.x2);
    hi = std::max(hi, v.x2);
  }
  // columns strictly between the extreme dual abscissae
  p.x_min = (lo + 1) / 2;
  p.x_max = (hi - 1) / 2;
  const std::size_t n = p.x_max >= p.x_min ? static_cast<std::size_t>(p.x_max - p.x_min + 1) : 0;
  p.defined.assign(n, 0);
  p.rho_min.assign(n, 0);
  p.rho_max.assign(n, 0);
  for (std::size_t i = 0; i + 1 < c.vertices.size(); ++i) {
    const DualPoint a = c.vertices[i], b = c.vertices[i + 1];
    if (a.y2 != b.y2) continue;
    const i64 x = (std::min(a.x2, b.x2) + 1) / 2;
    const i64 rho = (a.y2 - base) / 2;
    const std::size_t k = static_cast<std::size_t>(x - p.x_min);
    if (!p.defined[k]) {
      p.defined[k] = 1;
      p.rho_min[k] = p.rho_max[k] = rho;
    } else {
      p.rho_min[k] = std::min(p.rho_min[k], rho);
      p.rho_max[k] = std::max(p.rho_max[k], rho);
    }
  }
  return p;
}

int winding(const Contour& c, const Site& s) {
  int w = 0;
  for (std::size_t i = 0; i + 1 < c.vertices.size(); ++i) {
    const DualPoint a = c.vertices[i], b = c.vertices[i + 1];
    if (a.x2 != b.x2 || a.x2 < 2 * s.x) continue;
    if (std::min(a.y2, b.y2) < 2 * s.y && std::max(a.y2, b.y2) > 2 * s.y) w += (b.y2 > a.y2) ? 1 : -1;
  }
  return w;
}

i64 area_below(const Contour& c, std::optional<i64> base_y2) {
  const i64 base = base_y2.value_or(c.vertices.front().y2);
  // integral of (y - base) dx along the path, sign chosen so left-to-right is positive
  i64 acc = 0;
  for (std::size_t i = 0; i + 1 < c.vertices.size(); ++i) {
    const DualPoint a = c.vertices[i], b = c.vertices[i + 1];
    acc += (b.x2 - a.x2) * (a.y2 - base);
  }
  return acc / 4;
}

std::vector<Site> to_path(const Contour& c) {
  std::vector<Site> p;
  p.reserve(c.vertices.size());
  for (const auto& v : c.vertices) p.push_back(dual_origin_map(v));
  return p;
}

Contour from_path(const std::vector<Site>& path) {
  Contour c;
  for (const Site& s : path) c.vertices.push_back(dual_origin_inverse(s));
  c.open = c.vertices.size() < 2 || !(c.vertices.front() == c.vertices.back());
  return c;
}

void write_contour(std::ostream& os, const Contour& c) {
  for (const auto& e : c.bonds()) os << e.a.x2 << ' ' << e.a.y2 << ' ' << e.b.x2 << ' ' << e.b.y2 << '\n';
}

Contour read_contour(std::istream& is) {
  Contour c;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    i64 x1, y1, x2, y2;
    if (!(ls >> x1 >> y1 >> x2 >> y2)) throw std::invalid_argument("malformed contour line: " + line);
    const DualBond e{make_dual(x1, y1), make_dual(x2, y2)};
    if (!is_valid_bond(e)) throw std::invalid_argument("not a dual bond: " + line);
    if (c.vertices.empty()) c.vertices.push_back(e.a);
    else if (!(c.vertices.back() == e.a)) throw std::invalid_argument("bonds do not chain");
    c.vertices.push_back(e.b);
  }
  c.open = c.vertices.size() < 2 || !(c.vertices.front() == c.vertices.back());
  return c;
}

}  // namespace soslab
