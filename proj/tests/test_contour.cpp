#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "soslab/contour.hpp"

using namespace soslab;

namespace {

HeightField flat(i64 w, i64 h, int value, BoundaryCondition bc = BoundaryCondition::constant(0), bool floor = true) {
  return HeightField(Box(w, h), std::move(bc), floor, 1.0, value);
}

// Independent check of the splitting rule: at every vertex visited twice the two
// bond pairs each lie on one side of the slope-1 line.
bool obeys_ne_rule(const Contour& c) {
  const auto& v = c.vertices;
  std::map<DualPoint, std::vector<std::size_t>> visits;
  const std::size_t last = c.open ? v.size() - 1 : v.size() - 2;
  for (std::size_t i = 1; i < v.size() - 1; ++i) visits[v[i]].push_back(i);
  if (!c.open) visits[v[0]].push_back(0);
  (void)last;
  for (const auto& [p, idx] : visits) {
    if (idx.size() < 2) continue;
    for (std::size_t i : idx) {
      const DualPoint a = i == 0 ? v[v.size() - 2] : v[i - 1];
      const DualPoint b = v[i + 1];
      // signed side relative to the line y - y_p = x - x_p
      const i64 sa = (a.y2 - p.y2) - (a.x2 - p.x2);
      const i64 sb = (b.y2 - p.y2) - (b.x2 - p.x2);
      if ((sa > 0) != (sb > 0)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("single raised site gives a square loop") {
  auto f = flat(3, 3, 0);
  f.set({2, 2}, 1);
  const auto ls = extract_level_lines(f, 1);
  REQUIRE(ls.size() == 1);
  CHECK_FALSE(ls[0].open);
  CHECK(ls[0].length() == 4);
  CHECK(winding(ls[0], {2, 2}) == 1);
  CHECK(winding(ls[0], {1, 2}) == 0);
}

TEST_CASE("northeast splitting rule") {
  auto ne = flat(4, 4, 0);
  ne.set({1, 1}, 1);
  ne.set({2, 2}, 1);
  auto a = extract_level_lines(ne, 1);
  REQUIRE(a.size() == 1);
  CHECK(a[0].length() == 8);
  CHECK(obeys_ne_rule(a[0]));

  auto nw = flat(4, 4, 0);
  nw.set({1, 2}, 1);
  nw.set({2, 1}, 1);
  auto b = extract_level_lines(nw, 1);
  REQUIRE(b.size() == 2);
  CHECK(b[0].length() == 4);
  CHECK(b[1].length() == 4);
}

TEST_CASE("empty field has no level lines") {
  CHECK(extract_level_lines(flat(5, 5, 0), 1).empty());
  CHECK_THROWS(extract_level_lines(flat(2, 2, 0), 0));
}

TEST_CASE("open contour under 0,1,1,1") {
  const i64 N = 7;
  auto f = flat(N, 4, 1, BoundaryCondition::dobrushin_0111(), false);
  const Contour c = open_one_contour(f);
  CHECK(c.open);
  CHECK(c.length() == N);
  CHECK(c.vertices.front() == DualPoint{1, 1});
  CHECK(c.vertices.back() == DualPoint{2 * N + 1, 1});
  const auto p = displacement_profile(c);
  CHECK(p.x_min == 1);
  CHECK(p.x_max == N);
  for (i64 x = 1; x <= N; ++x) {
    CHECK(p.min_at(x) == 0);
    CHECK(p.max_at(x) == 0);
  }
  CHECK(area_below(c) == 0);

  f.set({4, 1}, 0);
  const Contour d = open_one_contour(f);
  CHECK(d.length() == N + 2);
  const auto q = displacement_profile(d);
  for (i64 x = 1; x <= N; ++x) {
    CHECK(q.min_at(x) == (x == 4 ? 1 : 0));
    CHECK(q.max_at(x) == (x == 4 ? 1 : 0));
  }
  CHECK(area_below(d) == 1);
  CHECK(q.min_over(3, 5) == 0);
  CHECK(q.min_over(4, 4) == 1);

  CHECK_THROWS_AS(open_one_contour(flat(4, 4, 0)), AmbiguityError);
}

TEST_CASE("legs boundary yields one open contour at h_high") {
  HeightField f(Box(8, 5), BoundaryCondition::legs(3, 2, 3, 6), true, 1.0);
  const Contour c = open_one_contour(f);
  CHECK(c.length() == 4);
  CHECK(c.vertices.front() == DualPoint{5, 1});
  CHECK(c.vertices.back() == DualPoint{13, 1});
}

TEST_CASE("profile overhang and translation") {
  // contour with an overhang: path E,N,N,E,S,E in site frame
  const Contour c = from_path({{0, 0}, {1, 0}, {1, 1}, {1, 2}, {2, 2}, {2, 1}, {3, 1}});
  const auto p = displacement_profile(c);
  // vertex (0,0) is the dual point (1/2,1/2), so the first bond covers column 1
  CHECK(p.x_min == 1);
  CHECK(p.min_at(1) == 0);
  CHECK(p.max_at(2) == 2);
  CHECK(p.max_at(3) == 1);
  const auto t = displacement_profile(translate(c, {5, 0}));
  for (i64 x = p.x_min; x <= p.x_max; ++x) {
    CHECK(t.min_at(x + 5) == p.min_at(x));
    CHECK(t.max_at(x + 5) == p.max_at(x));
  }
}

TEST_CASE("random fields: conservation, rule, translation, nesting") {
  Rng rng(3);
  std::uniform_int_distribution<int> hd(0, 3);
  for (int trial = 0; trial < 40; ++trial) {
    const i64 W = 6, H = 5;
    HeightField f(Box(W, H), BoundaryCondition::constant(0), true, 1.0, 0);
    for (i64 y = 1; y <= H; ++y)
      for (i64 x = 1; x <= W; ++x) f.set({x, y}, hd(rng));
    std::vector<std::vector<Contour>> levels;
    for (int h = 1; h <= 3; ++h) {
      const auto ls = extract_level_lines(f, h);
      std::size_t total = 0;
      std::set<std::tuple<i64, i64, i64, i64>> seen;
      for (const auto& c : ls) {
        CHECK_FALSE(c.open);
        CHECK(obeys_ne_rule(c));
        total += c.length();
        for (const auto& e : c.bonds()) CHECK(seen.insert({e.a.x2, e.a.y2, e.b.x2, e.b.y2}).second);
      }
      CHECK(total == count_separating_bonds(f, h));
      // translated field gives translated contours
      HeightField g(Box(W, H, {4, -2}), BoundaryCondition::constant(0), true, 1.0, 0);
      for (i64 y = 1; y <= H; ++y)
        for (i64 x = 1; x <= W; ++x) g.set({x + 3, y - 3}, f.at({x, y}));
      const auto lt = extract_level_lines(g, h);
      REQUIRE(lt.size() == ls.size());
      std::multiset<std::vector<DualPoint>> a, b;
      for (const auto& c : ls) a.insert(translate(c, {3, -3}).vertices);
      for (const auto& c : lt) b.insert(c.vertices);
      CHECK(a == b);
      levels.push_back(ls);
    }
    // every site enclosed by a level-(k+1) loop is enclosed by a level-k loop
    for (std::size_t k = 0; k + 1 < levels.size(); ++k)
      for (const auto& inner : levels[k + 1])
        for (i64 y = 1; y <= H; ++y)
          for (i64 x = 1; x <= W; ++x) {
            if (winding(inner, {x, y}) == 0) continue;
            bool covered = false;
            for (const auto& outer : levels[k]) covered |= winding(outer, {x, y}) != 0;
            CHECK(covered);
          }
  }
}

TEST_CASE("serialization round trip") {
  auto f = flat(6, 4, 1, BoundaryCondition::dobrushin_0111(), false);
  f.set({2, 1}, 0);
  f.set({3, 1}, 0);
  f.set({3, 2}, 0);
  const Contour c = open_one_contour(f);
  std::stringstream ss;
  write_contour(ss, c);
  const Contour r = read_contour(ss);
  CHECK(r.vertices == c.vertices);
  CHECK(r.open);
  std::stringstream first;
  write_contour(first, c);
  std::string line;
  std::getline(first, line);
  CHECK(line == "1 1 3 1");
  std::stringstream bad("1 1 2 1\n");
  CHECK_THROWS(read_contour(bad));
}
